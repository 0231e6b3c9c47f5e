#pragma once

#include <set>
#include <string>
#include <vector>

#include "vulnloc/ast.hpp"
#include "vulnloc/source_token.hpp"

namespace vulnloc {

// The four vulnerability syntax characteristics.
enum class CandidateKind {
    FunctionCall, // FC: library/API call with >=1 variable argument
    ArrayDef,     // AD: variable declaration whose code contains '[' and ']'
    PointerDef,   // PD: variable declaration whose code contains '*'
    AssignExpr,   // AE: assignment with >=1 variable on the right-hand side
};

const char* kind_code(CandidateKind k);
CandidateKind kind_from_code(const std::string& code);

struct SyntaxCandidate {
    CandidateKind kind;
    std::vector<SourceToken> tokens; // within one statement, document order
    std::string file;
    int line = 0;   // anchor: first token
    int column = 0;

    // First token's text; how the candidate is usually referred to.
    const std::string& name() const { return tokens.front().text; }
    std::string display_text() const;
    std::string id() const; // stable: kind:file:line:column
};

using ApiNameList = std::set<std::string>;

ApiNameList load_api_names(const std::string& path);

// Walks the AST in document order and returns all candidates of all four
// kinds, deduplicated by (kind, anchor).
std::vector<SyntaxCandidate> extract_candidates(const AstNode& root, const TokenList& tokens,
                                            const ApiNameList& api_names);

std::string write_candidate_list(const std::vector<SyntaxCandidate>& candidates);
std::vector<SyntaxCandidate> read_candidate_list(const std::string& text);

} // namespace vulnloc
