#include "vulnloc/candidates.hpp"

#include <fstream>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

const char* kind_code(CandidateKind k) {
    switch (k) {
    case CandidateKind::FunctionCall: return "FC";
    case CandidateKind::ArrayDef: return "AD";
    case CandidateKind::PointerDef: return "PD";
    case CandidateKind::AssignExpr: return "AE";
    }
    return "?";
}

CandidateKind kind_from_code(const std::string& code) {
    if (code == "FC") return CandidateKind::FunctionCall;
    if (code == "AD") return CandidateKind::ArrayDef;
    if (code == "PD") return CandidateKind::PointerDef;
    if (code == "AE") return CandidateKind::AssignExpr;
    throw FormatError("unknown candidate kind: " + code);
}

std::string SyntaxCandidate::display_text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i)
            out += ' ';
        out += tokens[i].text;
    }
    return out;
}

std::string SyntaxCandidate::id() const {
    return std::string(kind_code(kind)) + ":" + file + ":" + std::to_string(line) + ":" +
           std::to_string(column);
}

ApiNameList load_api_names(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open API name list: " + path);
    ApiNameList names;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        names.insert(std::string(t));
    }
    return names;
}

namespace {

class Extractor {
  public:
    Extractor(const TokenList& toks, const ApiNameList& api) : toks_(toks), api_(api) {}

    std::vector<SyntaxCandidate> run(const AstNode& root) {
        visit(root);
        return std::move(result_);
    }

  private:
    const TokenList& toks_;
    const ApiNameList& api_;
    std::vector<SyntaxCandidate> result_;
    std::set<std::pair<std::string, std::pair<int, int>>> seen_; // (kind+file, (line, col))

    void emit(CandidateKind kind, std::vector<SourceToken> tokens) {
        SyntaxCandidate c;
        c.kind = kind;
        c.file = tokens.front().file;
        c.line = tokens.front().line;
        c.column = tokens.front().column;
        c.tokens = std::move(tokens);
        auto key = std::make_pair(std::string(kind_code(kind)) + c.file,
                                  std::make_pair(c.line, c.column));
        if (seen_.insert(key).second)
            result_.push_back(std::move(c));
    }

    bool span_has(const TokenSpan& span, char ch) const {
        for (std::size_t i = span.begin; i < span.end; ++i)
            if (toks_[i].text.size() == 1 && toks_[i].text[0] == ch)
                return true;
        return false;
    }

    void visit(const AstNode& node) {
        switch (node.type) {
        case NodeType::VarDeclaration: {
            // AD: declaration code contains '[' and ']'; PD: contains '*'.
            std::vector<SourceToken> id_tok = {toks_[node.name_token]};
            if (span_has(node.span, '[') && span_has(node.span, ']'))
                emit(CandidateKind::ArrayDef, id_tok);
            if (span_has(node.span, '*'))
                emit(CandidateKind::PointerDef, id_tok);
            break;
        }
        case NodeType::CallExpr: {
            // FC matching per the four-step traversal: call node, name in the
            // API list, then variable-reference children; the callee plus its
            // variable arguments form the candidate.
            const std::string& callee = toks_[node.name_token].text;
            if (api_.count(callee)) {
                std::vector<SourceToken> cand = {toks_[node.name_token]};
                collect_refs(node, cand);
                if (cand.size() > 1)
                    emit(CandidateKind::FunctionCall, std::move(cand));
            }
            break;
        }
        case NodeType::AssignmentExpr: {
            bool rhs_has_var = false;
            for (const auto& child : node.children)
                if (child.type == NodeType::DeclRefExpr && child.name_token >= node.rhs_begin)
                    rhs_has_var = true;
            if (rhs_has_var) {
                std::vector<SourceToken> expr;
                for (std::size_t i = node.span.begin; i < node.span.end; ++i)
                    if (toks_[i].text != ";")
                        expr.push_back(toks_[i]);
                emit(CandidateKind::AssignExpr, std::move(expr));
            }
            break;
        }
        default:
            break;
        }
        for (const auto& child : node.children)
            visit(child);
    }

    // Direct variable references of a call's arguments (nested calls keep
    // their own).
    void collect_refs(const AstNode& call, std::vector<SourceToken>& out) const {
        for (const auto& child : call.children)
            if (child.type == NodeType::DeclRefExpr)
                out.push_back(toks_[child.name_token]);
    }
};

} // namespace

std::vector<SyntaxCandidate> extract_candidates(const AstNode& root, const TokenList& tokens,
                                            const ApiNameList& api_names) {
    if (tokens.empty())
        return {};
    return Extractor(tokens, api_names).run(root);
}

std::string write_candidate_list(const std::vector<SyntaxCandidate>& candidates) {
    std::ostringstream out;
    for (const auto& c : candidates)
        out << kind_code(c.kind) << '\t' << c.file << '\t' << c.line << '\t' << c.column
            << '\t' << c.display_text() << '\n';
    return out.str();
}

std::vector<SyntaxCandidate> read_candidate_list(const std::string& text) {
    std::vector<SyntaxCandidate> out;
    for (const auto& line : split(text, '\n')) {
        if (trim(line).empty())
            continue;
        auto fields = split(line, '\t');
        if (fields.size() != 5)
            throw FormatError("candidate record needs 5 fields: " + line);
        SyntaxCandidate c;
        c.kind = kind_from_code(fields[0]);
        c.file = fields[1];
        c.line = static_cast<int>(parse_long(fields[2], "candidate line"));
        c.column = static_cast<int>(parse_long(fields[3], "candidate column"));
        for (const auto& word : split_ws(fields[4])) {
            SourceToken t;
            t.text = word;
            t.file = c.file;
            t.line = c.line;
            t.column = c.column;
            c.tokens.push_back(std::move(t));
        }
        if (c.tokens.empty())
            throw FormatError("candidate record has no tokens: " + line);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace vulnloc
