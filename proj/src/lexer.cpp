#include "vulnloc/lexer.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

#include "vulnloc/errors.hpp"

namespace vulnloc {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "auto",     "break",   "case",     "char",   "const",    "continue", "default",
    "do",       "double",  "else",     "enum",   "extern",   "float",    "for",
    "goto",     "if",      "inline",   "int",    "long",     "register", "restrict",
    "return",   "short",   "signed",   "sizeof", "static",   "struct",   "switch",
    "typedef",  "union",   "unsigned", "void",   "volatile", "while",    "_Bool",
    "_Complex", "_Imaginary",
};

// Longest-match first.
constexpr std::array<std::string_view, 19> kMultiCharOps = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=",
    "==",  "!=",  "&&",  "||", "+=", "-=", "*=", "/=", "%=",
};

constexpr std::string_view kSingleOps = "+-*/%<>=!&|^~?.";
constexpr std::string_view kPunct = "()[]{},;:#";

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace

bool is_c_keyword(std::string_view word) {
    return kKeywords.count(word) > 0;
}

TokenList tokenize_c(std::string_view src, const std::string& file) {
    TokenList out;
    std::size_t i = 0;
    int line = 1, col = 1;

    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    auto emit = [&](std::size_t len, TokenKind kind) {
        out.push_back({std::string(src.substr(i, len)), kind, file, line, col});
        advance(len);
    };

    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n')
                advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            int open_line = line;
            advance(2);
            while (true) {
                if (i + 1 >= src.size())
                    throw LexError(file + ":" + std::to_string(open_line) +
                                   ": unterminated block comment");
                if (src[i] == '*' && src[i + 1] == '/') {
                    advance(2);
                    break;
                }
                advance(1);
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            char quote = c;
            std::size_t len = 1;
            while (true) {
                if (i + len >= src.size() || src[i + len] == '\n')
                    throw LexError(file + ":" + std::to_string(line) + ": unterminated " +
                                   (quote == '"' ? "string literal" : "character constant"));
                if (src[i + len] == '\\') {
                    len += 2;
                    continue;
                }
                if (src[i + len] == quote) {
                    ++len;
                    break;
                }
                ++len;
            }
            emit(len, quote == '"' ? TokenKind::StringLiteral : TokenKind::Constant);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t len = 1;
            while (i + len < src.size()) {
                char d = src[i + len];
                if (ident_char(d) || d == '.') {
                    ++len;
                } else if ((d == '+' || d == '-') && (src[i + len - 1] == 'e' || src[i + len - 1] == 'E' ||
                                                      src[i + len - 1] == 'p' || src[i + len - 1] == 'P')) {
                    ++len;
                } else {
                    break;
                }
            }
            emit(len, TokenKind::Constant);
            continue;
        }
        if (ident_start(c)) {
            std::size_t len = 1;
            while (i + len < src.size() && ident_char(src[i + len]))
                ++len;
            auto word = src.substr(i, len);
            emit(len, is_c_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier);
            continue;
        }
        bool matched = false;
        for (auto op : kMultiCharOps) {
            if (src.substr(i, op.size()) == op) {
                emit(op.size(), TokenKind::Operator);
                matched = true;
                break;
            }
        }
        if (matched)
            continue;
        if (kSingleOps.find(c) != std::string_view::npos) {
            emit(1, TokenKind::Operator);
            continue;
        }
        if (kPunct.find(c) != std::string_view::npos) {
            emit(1, TokenKind::Punctuation);
            continue;
        }
        // Unknown byte: keep it as punctuation so coverage stays total.
        emit(1, TokenKind::Punctuation);
    }
    return out;
}

std::string reconstruct_source(const TokenList& tokens) {
    std::string out;
    int line = 1, col = 1;
    for (const auto& t : tokens) {
        while (line < t.line) {
            out += '\n';
            ++line;
            col = 1;
        }
        while (col < t.column) {
            out += ' ';
            ++col;
        }
        out += t.text;
        for (char c : t.text) {
            if (c == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    }
    out += '\n';
    return out;
}

} // namespace vulnloc
