#pragma once

#include <string>
#include <vector>

namespace vulnloc {

enum class TokenKind {
    Identifier,
    Keyword,
    Operator,
    Constant,
    StringLiteral,
    Punctuation,
};

struct SourceToken {
    std::string text;
    TokenKind kind = TokenKind::Identifier;
    std::string file;
    int line = 1;   // 1-based
    int column = 1; // 1-based
};

using TokenList = std::vector<SourceToken>;

// [begin, end) over a token list.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return begin >= end; }
    bool contains(const TokenSpan& other) const {
        return begin <= other.begin && other.end <= end;
    }
};

} // namespace vulnloc
