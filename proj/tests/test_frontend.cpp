#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vulnloc/candidates.hpp"
#include "vulnloc/errors.hpp"
#include "vulnloc/lexer.hpp"
#include "vulnloc/text.hpp"

using namespace vulnloc;

namespace {

ApiNameList test_api() {
    return {"printf", "memset", "memmove", "memcpy", "strcpy", "malloc", "free"};
}

std::vector<SyntaxCandidate> extract_from(const std::string& src,
                                          const ApiNameList& api = test_api()) {
    auto tokens = tokenize_c(src, "t.c");
    auto root = parse_c_unit(tokens);
    return extract_candidates(root, tokens, api);
}

std::string fixture(const std::string& rel) { return std::string(FIXTURE_DIR) + "/" + rel; }

} // namespace

TEST_CASE("lexing basic declarations") {
    auto toks = tokenize_c("char *data;", "t.c");
    REQUIRE(toks.size() == 4);
    CHECK(toks[0].kind == TokenKind::Keyword);
    CHECK(toks[0].text == "char");
    CHECK(toks[1].kind == TokenKind::Operator);
    CHECK(toks[1].text == "*");
    CHECK(toks[2].kind == TokenKind::Identifier);
    CHECK(toks[2].text == "data");
    CHECK(toks[3].kind == TokenKind::Punctuation);
    CHECK(toks[3].text == ";");
}

TEST_CASE("lexing an assignment yields six tokens ending in semicolon") {
    auto toks = tokenize_c("data = dataBuffer - 8;", "t.c");
    REQUIRE(toks.size() == 6);
    CHECK(toks.back().text == ";");
    CHECK(toks[4].kind == TokenKind::Constant);
}

TEST_CASE("comments are discarded") {
    auto toks = tokenize_c("/*x*/ int a;", "t.c");
    REQUIRE(toks.size() == 3);
    CHECK(toks[0].text == "int");
    CHECK(toks[0].column == 7);
}

TEST_CASE("lex errors carry line numbers") {
    CHECK_THROWS_AS(tokenize_c("\n\"abc", "t.c"), LexError);
    CHECK_THROWS_AS(tokenize_c("int a;\n/* never closed", "t.c"), LexError);
    try {
        tokenize_c("int a;\n/* never closed", "t.c");
    } catch (const LexError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("token positions reconstruct the source") {
    std::string src = "int  main() {\n    return 0; /*gone*/\n}\n";
    auto toks = tokenize_c(src, "t.c");
    auto rebuilt = reconstruct_source(toks);
    auto again = tokenize_c(rebuilt, "t.c");
    REQUIRE(again.size() == toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
        CHECK(again[i].text == toks[i].text);
        CHECK(again[i].line == toks[i].line);
        CHECK(again[i].column == toks[i].column);
    }
}

TEST_CASE("shallow parse recognizes structure") {
    SUBCASE("plain declaration, no candidates") {
        auto cands = extract_from("int x;");
        CHECK(cands.empty());
    }
    SUBCASE("nested calls become nested nodes") {
        auto tokens = tokenize_c("void h() { f(g(a)); }", "t.c");
        auto root = parse_c_unit(tokens);
        REQUIRE(root.children.size() == 1);
        const AstNode& fn = root.children[0];
        CHECK(fn.type == NodeType::FunctionDef);
        REQUIRE(fn.children.size() == 1);
        const AstNode& call = fn.children[0];
        CHECK(call.type == NodeType::CallExpr);
        CHECK(tokens[call.name_token].text == "f");
        bool has_nested = false;
        for (const auto& child : call.children)
            if (child.type == NodeType::CallExpr && tokens[child.name_token].text == "g")
                has_nested = true;
        CHECK(has_nested);
    }
    SUBCASE("unbalanced braces raise a parse error with location") {
        auto tokens = tokenize_c("int main() { {", "t.c");
        CHECK_THROWS_AS(parse_c_unit(tokens), ParseError);
    }
    SUBCASE("unbalanced parens raise a parse error") {
        auto tokens = tokenize_c("int main() { f(; }", "t.c");
        CHECK_THROWS_AS(parse_c_unit(tokens), ParseError);
    }
}

TEST_CASE("extraction on the demo program yields the eight expected candidates") {
    auto src = read_file(fixture("demo/src/main.c"));
    auto tokens = tokenize_c(src, "main.c");
    auto root = parse_c_unit(tokens);
    auto api = load_api_names(fixture("api_names.txt"));
    auto cands = extract_candidates(root, tokens, api);

    REQUIRE(cands.size() == 8);
    auto at = [&](std::size_t i) {
        return std::make_tuple(std::string(kind_code(cands[i].kind)), cands[i].name(),
                               cands[i].line);
    };
    CHECK(at(0) == std::make_tuple("PD", "data", 2));
    CHECK(at(1) == std::make_tuple("FC", "printf", 6));
    CHECK(at(2) == std::make_tuple("AD", "dataBuffer", 10));
    CHECK(at(3) == std::make_tuple("AD", "source", 11));
    CHECK(at(4) == std::make_tuple("FC", "memset", 14));
    CHECK(at(5) == std::make_tuple("AE", "data", 19));
    CHECK(at(6) == std::make_tuple("FC", "memset", 23));
    CHECK(at(7) == std::make_tuple("FC", "memmove", 25));
    CHECK(cands[5].display_text() == "data = dataBuffer - 8");
}

TEST_CASE("AD and AE can share a line") {
    auto cands = extract_from("void f() { char buf[10]; p = buf; }");
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].kind == CandidateKind::ArrayDef);
    CHECK(cands[0].name() == "buf");
    CHECK(cands[0].line == 1);
    CHECK(cands[1].kind == CandidateKind::AssignExpr);
    CHECK(cands[1].line == 1);
    CHECK(cands[1].display_text() == "p = buf");
}

TEST_CASE("a declaration matching several kinds emits one candidate per kind") {
    auto cands = extract_from("char *p[4];");
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].kind == CandidateKind::ArrayDef);
    CHECK(cands[1].kind == CandidateKind::PointerDef);
    CHECK(cands[0].name() == "p");
    CHECK(cands[1].name() == "p");
}

TEST_CASE("rule checks against hand-derived candidates") {
    struct Expected {
        const char* kind;
        const char* name;
        int line;
    };
    struct Case {
        const char* src;
        std::vector<Expected> expected;
    };
    // Hand-applied rules: FC needs an API name and a variable argument; AD
    // needs brackets on a declaration; PD a star; AE a variable on the RHS.
    const std::vector<Case> cases = {
        {"void f() { memset(buf, 0, 4); }", {{"FC", "memset", 1}}},
        {"void f() { memset(\"lit\", 0, 4); }", {}}, // no variable argument
        {"void f() { exotic(buf); }", {}},           // not an API name
        {"void f(void) { int n; n = 4; }", {}},      // constant RHS
        {"void f(void) { int n, m; n = m + 1; }", {{"AE", "n", 1}}},
        {"double grid[8][8];", {{"AD", "grid", 1}}},
        {"static const char *const msg = \"x\";", {{"PD", "msg", 1}}},
        {"void f() { while (x > 0) { x = x - 1; } }", {{"AE", "x", 1}}},
        {"int a; float b;", {}},
        {"void f() { q = malloc(n); }", {{"AE", "q", 1}, {"FC", "malloc", 1}}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.src);
        auto cands = extract_from(c.src);
        REQUIRE(cands.size() == c.expected.size());
        for (std::size_t i = 0; i < cands.size(); ++i) {
            CHECK(std::string(kind_code(cands[i].kind)) == c.expected[i].kind);
            CHECK(cands[i].name() == c.expected[i].name);
            CHECK(cands[i].line == c.expected[i].line);
        }
    }
}

TEST_CASE("FC candidates carry the callee and its variable arguments") {
    auto cands = extract_from("void f() { memmove(dst, src, n); }");
    REQUIRE(cands.size() == 1);
    REQUIRE(cands[0].tokens.size() == 4);
    CHECK(cands[0].tokens[0].text == "memmove");
    CHECK(cands[0].tokens[1].text == "dst");
    CHECK(cands[0].tokens[2].text == "src");
    CHECK(cands[0].tokens[3].text == "n");
}

TEST_CASE("extraction invariants") {
    auto src = read_file(fixture("demo/src/main.c"));
    auto api = load_api_names(fixture("api_names.txt"));

    auto tokens = tokenize_c(src, "main.c");
    auto root = parse_c_unit(tokens);
    auto first = extract_candidates(root, tokens, api);

    SUBCASE("determinism: identical bytes give an identical list") {
        auto again = extract_candidates(parse_c_unit(tokens), tokens, api);
        REQUIRE(again.size() == first.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            CHECK(again[i].id() == first[i].id());
            CHECK(again[i].display_text() == first[i].display_text());
        }
    }
    SUBCASE("candidate tokens stay on one statement, in document order") {
        for (const auto& c : first) {
            REQUIRE(!c.tokens.empty());
            for (std::size_t i = 1; i < c.tokens.size(); ++i) {
                bool ordered = c.tokens[i].line > c.tokens[i - 1].line ||
                               (c.tokens[i].line == c.tokens[i - 1].line &&
                                c.tokens[i].column >= c.tokens[i - 1].column);
                CHECK(ordered);
            }
        }
    }
    SUBCASE("FC candidates name an API function with an identifier argument") {
        for (const auto& c : first)
            if (c.kind == CandidateKind::FunctionCall) {
                CHECK(api.count(c.name()) == 1);
                CHECK(c.tokens.size() >= 2);
            }
    }
    SUBCASE("re-extracting from reconstructed source matches") {
        auto rebuilt = reconstruct_source(tokens);
        auto tokens2 = tokenize_c(rebuilt, "main.c");
        auto second = extract_candidates(parse_c_unit(tokens2), tokens2, api);
        REQUIRE(second.size() == first.size());
        for (std::size_t i = 0; i < first.size(); ++i)
            CHECK(second[i].id() == first[i].id());
    }
}
