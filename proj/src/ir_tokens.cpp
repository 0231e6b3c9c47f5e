#include "vulnloc/ir_tokens.hpp"

#include <cctype>

namespace vulnloc {

namespace {

bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' ||
           c == '-';
}

void lex_statement(const std::string& text, std::vector<std::string>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t') {
            ++i;
            continue;
        }
        if (c == '%') { // local id: one token including the sigil
            std::size_t j = i + 1;
            while (j < text.size() && name_char(text[j]))
                ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        if (c == '@') { // global: the sigil is its own token
            out.push_back("@");
            std::size_t j = i + 1;
            if (j < text.size() && text[j] == '"') {
                std::size_t k = j + 1;
                while (k < text.size() && text[k] != '"')
                    ++k;
                out.push_back(text.substr(j + 1, k - j - 1));
                i = k + 1;
            } else {
                std::size_t k = j;
                while (k < text.size() && name_char(text[k]))
                    ++k;
                if (k > j)
                    out.push_back(text.substr(j, k - j));
                i = k;
            }
            continue;
        }
        if (c == 'c' && i + 1 < text.size() && text[i + 1] == '"') {
            std::size_t j = i + 2;
            while (j < text.size() && text[j] != '"') {
                if (text[j] == '\\')
                    ++j;
                ++j;
            }
            out.push_back(text.substr(i, j + 1 - i));
            i = j + 1;
            continue;
        }
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '"')
                ++j;
            out.push_back(text.substr(i, j + 1 - i));
            i = j + 1;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i + 1;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                       text[j] == '.' || text[j] == 'x'))
                ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i + 1;
            while (j < text.size() && name_char(text[j]))
                ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        out.push_back(std::string(1, c));
        ++i;
    }
}

} // namespace

TokenSequence tokenize_ir(const SemanticCandidate& candidate) {
    TokenSequence seq;
    for (const auto& st : candidate.statements) {
        std::size_t begin = seq.tokens.size();
        lex_statement(st.text, seq.tokens);
        seq.line_spans.emplace_back(begin, seq.tokens.size());
    }
    return seq;
}

TokenSequence symbolize(const TokenSequence& seq, const ApiNameList& api_names,
                        std::map<std::string, std::string>* name_map) {
    // First pass: user-defined function names, in first-appearance order.
    std::map<std::string, std::string> mapping;
    std::vector<std::string> order;
    for (std::size_t i = 0; i + 2 < seq.tokens.size(); ++i)
        if (seq.tokens[i] == "@" && seq.tokens[i + 2] == "(") {
            const std::string& name = seq.tokens[i + 1];
            if (!api_names.count(name) && !mapping.count(name)) {
                order.push_back(name);
                mapping[name] = "FUN" + std::to_string(order.size());
            }
        }
    TokenSequence out = seq;
    for (std::size_t i = 0; i + 1 < out.tokens.size(); ++i)
        if (out.tokens[i] == "@") {
            auto it = mapping.find(out.tokens[i + 1]);
            if (it != mapping.end())
                out.tokens[i + 1] = it->second;
        }
    if (name_map)
        *name_map = std::move(mapping);
    return out;
}

} // namespace vulnloc
