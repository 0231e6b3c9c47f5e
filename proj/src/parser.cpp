#include "vulnloc/ast.hpp"

#include <algorithm>
#include <unordered_set>

#include "vulnloc/errors.hpp"

namespace vulnloc {

namespace {

const std::unordered_set<std::string> kTypeOrStorage = {
    "void",   "char",   "short",    "int",      "long",   "float",    "double",
    "signed", "unsigned", "_Bool",  "struct",   "union",  "enum",     "const",
    "volatile", "static", "extern", "register", "auto",   "typedef",  "inline",
    "restrict",
};

class ShallowParser {
  public:
    explicit ShallowParser(const TokenList& toks) : toks_(toks) {}

    AstNode run() {
        check_balance();
        AstNode root;
        root.type = NodeType::TranslationUnit;
        root.span = {0, toks_.size()};
        std::size_t i = 0;
        while (i < toks_.size())
            parse_item(i, root.children, /*top_level=*/true);
        return root;
    }

  private:
    const TokenList& toks_;

    const SourceToken& tok(std::size_t i) const { return toks_[i]; }
    bool is(std::size_t i, const char* text) const {
        return i < toks_.size() && toks_[i].text == text;
    }
    bool is_ident(std::size_t i) const {
        return i < toks_.size() && toks_[i].kind == TokenKind::Identifier;
    }

    [[noreturn]] void fail(std::size_t i, const std::string& msg) const {
        const SourceToken& t = i < toks_.size() ? toks_[i] : toks_.back();
        throw ParseError(t.file + ":" + std::to_string(t.line) + ":" +
                         std::to_string(t.column) + ": " + msg);
    }

    void check_balance() const {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            const std::string& s = toks_[i].text;
            if (s == "(" || s == "{" || s == "[") {
                stack.push_back(i);
            } else if (s == ")" || s == "}" || s == "]") {
                static const std::string open = "({[", close = ")}]";
                if (stack.empty())
                    fail(i, "unmatched '" + s + "'");
                char want = open[close.find(s[0])];
                if (toks_[stack.back()].text[0] != want)
                    fail(i, "mismatched '" + s + "'");
                stack.pop_back();
            }
        }
        if (!stack.empty())
            fail(stack.back(), "unclosed '" + toks_[stack.back()].text + "'");
    }

    std::size_t matching_close(std::size_t open) const {
        int depth = 0;
        for (std::size_t i = open; i < toks_.size(); ++i) {
            const std::string& s = toks_[i].text;
            if (s == "(" || s == "{" || s == "[")
                ++depth;
            else if (s == ")" || s == "}" || s == "]")
                if (--depth == 0)
                    return i;
        }
        fail(open, "unclosed group");
    }

    // End of the current statement: the ';' at depth 0, or the token before a
    // '{' that opens a block.
    std::size_t statement_end(std::size_t i) const {
        int depth = 0;
        for (; i < toks_.size(); ++i) {
            const std::string& s = toks_[i].text;
            if (s == "(" || s == "[")
                ++depth;
            else if (s == ")" || s == "]")
                --depth;
            else if (depth == 0 && (s == ";" || s == "{" || s == "}"))
                return i;
        }
        return toks_.size();
    }

    // Identifier tokens used as values inside [b, e): not callee names, not
    // member names after '.'/'->'.
    void collect_decl_refs(std::size_t b, std::size_t e, AstNode& parent) const {
        for (std::size_t i = b; i < e; ++i) {
            if (!is_ident(i))
                continue;
            if (i + 1 < e && toks_[i + 1].text == "(")
                continue; // callee
            if (i > b && (toks_[i - 1].text == "." || toks_[i - 1].text == "->"))
                continue;
            AstNode ref;
            ref.type = NodeType::DeclRefExpr;
            ref.span = {i, i + 1};
            ref.name_token = i;
            parent.children.push_back(ref);
        }
    }

    // Finds call expressions inside [b, e); nested calls become children of
    // the enclosing call.
    void collect_calls(std::size_t b, std::size_t e, std::vector<AstNode>& out) const {
        std::size_t i = b;
        while (i < e) {
            if (is_ident(i) && is(i + 1, "(")) {
                std::size_t close = matching_close(i + 1);
                AstNode call;
                call.type = NodeType::CallExpr;
                call.span = {i, close + 1};
                call.name_token = i;
                collect_calls(i + 2, close, call.children);
                collect_decl_refs(i + 2, close, call);
                out.push_back(std::move(call));
                i = close + 1;
            } else {
                ++i;
            }
        }
    }

    bool looks_like_declaration(std::size_t i) const {
        return i < toks_.size() && toks_[i].kind == TokenKind::Keyword &&
               kTypeOrStorage.count(toks_[i].text) > 0;
    }

    // Function definition: specifiers IDENT ( ... ) {
    bool try_function_def(std::size_t& i, std::vector<AstNode>& out) {
        std::size_t j = i;
        while (j < toks_.size() &&
               (looks_like_declaration(j) || toks_[j].text == "*" ||
                (is_ident(j) && is(j + 1, "("))))
        {
            if (is_ident(j) && is(j + 1, "(")) {
                std::size_t close = matching_close(j + 1);
                if (!is(close + 1, "{"))
                    return false;
                std::size_t body_close = matching_close(close + 1);
                AstNode fn;
                fn.type = NodeType::FunctionDef;
                fn.span = {i, body_close + 1};
                fn.name_token = j;
                std::size_t k = close + 2;
                while (k < body_close)
                    parse_item(k, fn.children, /*top_level=*/false);
                out.push_back(std::move(fn));
                i = body_close + 1;
                return true;
            }
            ++j;
        }
        return false;
    }

    // Declaration: specifiers, then comma-separated declarators, then ';'.
    // Emits one VarDeclaration per declarator; tag/typedef definitions and
    // prototypes fall back to Other.
    void parse_declaration(std::size_t& i, std::vector<AstNode>& out) {
        std::size_t start = i;
        std::size_t j = i;
        while (j < toks_.size() && looks_like_declaration(j)) {
            bool tag = toks_[j].text == "struct" || toks_[j].text == "union" ||
                       toks_[j].text == "enum";
            ++j;
            if (tag && is_ident(j))
                ++j;
            if (tag && is(j, "{")) { // type definition body
                other_until_semicolon(start, matching_close(j), out);
                i = out.back().span.end;
                return;
            }
        }
        bool first = true;
        std::size_t decl_start = start;
        while (j < toks_.size()) {
            std::size_t piece_start = first ? decl_start : j;
            while (is(j, "*") || (j < toks_.size() && toks_[j].kind == TokenKind::Keyword &&
                                  kTypeOrStorage.count(toks_[j].text)))
                ++j;
            bool paren_form = false;
            if (is(j, "(")) { // function-pointer declarator: ( * name ) ( ... )
                std::size_t close = matching_close(j);
                paren_form = true;
                std::size_t k = j + 1;
                while (is(k, "*"))
                    ++k;
                if (!is_ident(k)) {
                    other_until_semicolon(start, j, out);
                    i = out.back().span.end;
                    return;
                }
                j = close + 1;
                emit_declarator(piece_start, k, j, out, first);
                first = false;
            }
            if (!paren_form) {
                if (!is_ident(j)) {
                    other_until_semicolon(start, j, out);
                    i = out.back().span.end;
                    return;
                }
                std::size_t name = j++;
                while (is(j, "[")) // array suffixes
                    j = matching_close(j) + 1;
                if (is(j, "(")) { // prototype, not a variable
                    other_until_semicolon(start, j, out);
                    i = out.back().span.end;
                    return;
                }
                emit_declarator(piece_start, name, j, out, first);
                first = false;
            }
            if (is(j, "=")) { // initializer: up to top-level ',' or ';'
                std::size_t init_b = ++j;
                int depth = 0;
                while (j < toks_.size()) {
                    const std::string& s = toks_[j].text;
                    if (s == "(" || s == "[" || s == "{")
                        ++depth;
                    else if (s == ")" || s == "]" || s == "}")
                        --depth;
                    else if (depth == 0 && (s == "," || s == ";"))
                        break;
                    ++j;
                }
                AstNode& decl = out.back();
                collect_calls(init_b, j, decl.children);
                decl.span.end = j;
            }
            if (is(j, ",")) {
                ++j;
                continue;
            }
            if (is(j, ";")) {
                out.back().span.end = j + 1;
                i = j + 1;
                return;
            }
            // Missing ';': tolerate by closing the statement here.
            i = j;
            return;
        }
        i = j;
    }

    void emit_declarator(std::size_t span_begin, std::size_t name, std::size_t span_end,
                         std::vector<AstNode>& out, bool /*first*/) {
        AstNode decl;
        decl.type = NodeType::VarDeclaration;
        decl.span = {span_begin, span_end};
        decl.name_token = name;
        out.push_back(std::move(decl));
    }

    void other_until_semicolon(std::size_t start, std::size_t from, std::vector<AstNode>& out) {
        std::size_t j = from;
        int depth = 0;
        while (j < toks_.size()) {
            const std::string& s = toks_[j].text;
            if (s == "(" || s == "[" || s == "{")
                ++depth;
            else if (s == ")" || s == "]" || s == "}")
                --depth;
            else if (depth == 0 && s == ";")
                break;
            ++j;
        }
        AstNode other;
        other.type = NodeType::Other;
        other.span = {start, j < toks_.size() ? j + 1 : j};
        collect_calls(start, other.span.end, other.children);
        out.push_back(std::move(other));
    }

    // Expression statement [b, e): assignment, bare call, or other.
    void classify_expression(std::size_t b, std::size_t e, std::vector<AstNode>& out) {
        int depth = 0;
        std::size_t assign = toks_.size();
        static const std::unordered_set<std::string> kAssignOps = {
            "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
        for (std::size_t i = b; i < e; ++i) {
            const std::string& s = toks_[i].text;
            if (s == "(" || s == "[")
                ++depth;
            else if (s == ")" || s == "]")
                --depth;
            else if (depth == 0 && kAssignOps.count(s)) {
                assign = i;
                break;
            }
        }
        if (assign < e) {
            AstNode node;
            node.type = NodeType::AssignmentExpr;
            node.span = {b, e};
            node.rhs_begin = assign + 1;
            collect_calls(b, e, node.children);
            collect_decl_refs(assign + 1, e, node);
            out.push_back(std::move(node));
            return;
        }
        // A statement that is exactly one call keeps the call at statement level.
        if (is_ident(b) && is(b + 1, "(") && matching_close(b + 1) + 1 == e) {
            std::vector<AstNode> calls;
            collect_calls(b, e, calls);
            out.push_back(std::move(calls.front()));
            return;
        }
        AstNode other;
        other.type = NodeType::Other;
        other.span = {b, e};
        collect_calls(b, e, other.children);
        out.push_back(std::move(other));
    }

    void parse_item(std::size_t& i, std::vector<AstNode>& out, bool top_level) {
        if (i >= toks_.size())
            return;
        const SourceToken& t = tok(i);
        if (t.text == "#") { // preprocessor directive: consume the whole line
            std::size_t j = i;
            while (j < toks_.size() && toks_[j].line == t.line)
                ++j;
            AstNode other;
            other.type = NodeType::Other;
            other.span = {i, j};
            out.push_back(std::move(other));
            i = j;
            return;
        }
        if (t.text == ";" || t.text == "{") { // empty statement / bare block
            if (t.text == "{") {
                std::size_t close = matching_close(i);
                std::size_t j = i + 1;
                while (j < close)
                    parse_item(j, out, false);
                i = close + 1;
            } else {
                ++i;
            }
            return;
        }
        if (t.text == "}") { // tolerated stray close (balance already checked)
            ++i;
            return;
        }
        if (top_level || looks_like_declaration(i)) {
            std::size_t save = i;
            if (top_level && try_function_def(i, out))
                return;
            i = save;
            if (looks_like_declaration(i)) {
                parse_declaration(i, out);
                return;
            }
        }
        if (!top_level && t.kind == TokenKind::Keyword) {
            const std::string& kw = t.text;
            if (kw == "if" || kw == "while" || kw == "for" || kw == "switch") {
                std::size_t e = i + 1;
                if (is(e, "("))
                    e = matching_close(e) + 1;
                AstNode header;
                header.type = NodeType::Other;
                header.span = {i, e};
                collect_calls(i + 1, e, header.children);
                out.push_back(std::move(header));
                i = e;
                return;
            }
            if (kw == "else" || kw == "do") {
                AstNode other;
                other.type = NodeType::Other;
                other.span = {i, i + 1};
                out.push_back(std::move(other));
                ++i;
                return;
            }
            if (kw == "return" || kw == "goto" || kw == "break" || kw == "continue" ||
                kw == "case" || kw == "default") {
                std::size_t e = statement_end(i);
                std::size_t end = e < toks_.size() && toks_[e].text == ";" ? e + 1 : e;
                AstNode other;
                other.type = NodeType::Other;
                other.span = {i, end};
                collect_calls(i + 1, e, other.children);
                out.push_back(std::move(other));
                i = end;
                return;
            }
        }
        // Expression statement or unrecognized region.
        std::size_t e = statement_end(i);
        if (e < toks_.size() && toks_[e].text == "{") {
            // Unrecognized header followed by a block: take the header as
            // Other and let the block parse as siblings.
            AstNode other;
            other.type = NodeType::Other;
            other.span = {i, e};
            collect_calls(i, e, other.children);
            out.push_back(std::move(other));
            i = e;
            return;
        }
        if (e > i)
            classify_expression(i, e, out);
        i = e < toks_.size() && toks_[e].text == ";" ? e + 1 : std::max(e, i + 1);
    }
};

} // namespace

AstNode parse_c_unit(const TokenList& tokens) {
    return ShallowParser(tokens).run();
}

} // namespace vulnloc
