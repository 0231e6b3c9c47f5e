#pragma once

#include <cstddef>
#include <vector>

#include "vulnloc/source_token.hpp"

namespace vulnloc {

enum class NodeType {
    TranslationUnit,
    FunctionDef,
    VarDeclaration,
    CallExpr,
    AssignmentExpr,
    DeclRefExpr,
    Other,
};

// Shallow, error-tolerant AST. Child spans are contained in the parent span;
// sibling spans are disjoint and ordered.
struct AstNode {
    NodeType type = NodeType::Other;
    TokenSpan span;
    std::size_t name_token = static_cast<std::size_t>(-1); // callee / declared id
    std::size_t rhs_begin = 0;                             // AssignmentExpr: first RHS token
    std::vector<AstNode> children;

    bool has_name() const { return name_token != static_cast<std::size_t>(-1); }
};

// Builds a translation-unit AST from a token stream. Recognizes function
// definitions, variable declarations, call expressions, and assignment
// expressions; everything else becomes `Other` nodes with correct spans.
// Throws ParseError on unbalanced braces/parentheses.
AstNode parse_c_unit(const TokenList& tokens);

} // namespace vulnloc
