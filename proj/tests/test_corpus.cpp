#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "vulnloc/corpus.hpp"
#include "vulnloc/errors.hpp"
#include "vulnloc/rng.hpp"
#include "vulnloc/text.hpp"

using namespace vulnloc;

namespace {

std::string fixture(const std::string& rel) { return std::string(FIXTURE_DIR) + "/" + rel; }

// Builds a unified diff from explicit hunks and records which pre-patch
// lines carry a '-'. The truth is fixed at construction time, independent of
// the parser under test.
struct DiffBuilder {
    std::string text;
    std::set<std::pair<std::string, int>> expected;

    void file(const std::string& name) {
        text += "--- a/" + name + "\n+++ b/" + name + "\n";
        current = name;
    }

    // ops: 'c' context, 'd' deletion, 'a' addition
    void hunk(int old_start, const std::string& ops) {
        int old_count = 0, new_count = 0;
        for (char op : ops) {
            if (op == 'c') {
                ++old_count;
                ++new_count;
            } else if (op == 'd') {
                ++old_count;
            } else {
                ++new_count;
            }
        }
        text += "@@ -" + std::to_string(old_start) + "," + std::to_string(old_count) + " +" +
                std::to_string(old_start) + "," + std::to_string(new_count) + " @@\n";
        int old_line = old_start;
        for (char op : ops) {
            if (op == 'c') {
                text += " line\n";
                ++old_line;
            } else if (op == 'd') {
                text += "-gone\n";
                expected.insert({current, old_line});
                ++old_line;
            } else {
                text += "+new\n";
            }
        }
    }

  private:
    std::string current;
};

SemanticCandidate make_candidate(int id, Rng& rng) {
    SemanticCandidate c;
    c.id = "PD:f" + std::to_string(id) + ".c:" + std::to_string(1 + id) + ":3";
    c.kind = static_cast<CandidateKind>(rng.index(4));
    c.file = "f" + std::to_string(id) + ".c";
    c.line = 1 + static_cast<int>(rng.index(40));
    c.anchor_index = 0;
    c.functions_involved = {"main"};
    std::size_t stmts = 1 + rng.index(6);
    for (std::size_t s = 0; s < stmts; ++s) {
        CandidateStatement st;
        st.text = "%" + std::to_string(s + 1) + " = add i32 " + std::to_string(rng.index(100)) +
                  ", 1";
        if (rng.uniform() < 0.7) {
            st.source_file = c.file;
            st.source_line = 1 + static_cast<int>(rng.index(40));
        } else if (rng.uniform() < 0.3) {
            st.is_global = true;
        }
        c.statements.push_back(st);
    }
    if (rng.uniform() < 0.4)
        c.label.push_back(1 + static_cast<int>(rng.index(c.statements.size())));
    return c;
}

} // namespace

TEST_CASE("hunk arithmetic: a deletion at offset one lands on line eleven") {
    std::string diff = "--- a/x.c\n+++ b/x.c\n@@ -10,3 +10,2 @@\n line\n-gone\n line\n";
    auto got = parse_diff(diff);
    REQUIRE(got.size() == 1);
    CHECK(got.count({"x.c", 11}) == 1);
}

TEST_CASE("addition-only diffs yield no deleted lines") {
    std::string diff = "--- a/x.c\n+++ b/x.c\n@@ -10,2 +10,3 @@\n line\n+new\n line\n";
    CHECK(parse_diff(diff).empty());
    CHECK(diff_is_addition_only(diff));
}

TEST_CASE("two hunks with three deletions give three line numbers") {
    std::string diff = "--- a/x.c\n+++ b/x.c\n"
                       "@@ -3,3 +3,2 @@\n line\n-gone\n line\n"
                       "@@ -20,4 +19,2 @@\n-gone\n line\n-gone\n line\n";
    auto got = parse_diff(diff);
    REQUIRE(got.size() == 3);
    CHECK(got.count({"x.c", 4}) == 1);
    CHECK(got.count({"x.c", 20}) == 1);
    CHECK(got.count({"x.c", 22}) == 1);
}

TEST_CASE("malformed hunk headers are format errors") {
    CHECK_THROWS_AS(parse_diff("--- a/x.c\n+++ b/x.c\n@@ -x,3 +10,2 @@\n"), FormatError);
    CHECK_THROWS_AS(parse_diff("--- a/x.c\n+++ b/x.c\n@@ -10,3 10,2 @@\n"), FormatError);
}

TEST_CASE("fifty synthetic diffs match the construction-time truth") {
    Rng rng(5150);
    for (int round = 0; round < 50; ++round) {
        DiffBuilder b;
        int files = 1 + static_cast<int>(rng.index(2));
        for (int f = 0; f < files; ++f) {
            b.file("src" + std::to_string(f) + ".c");
            int hunks = 1 + static_cast<int>(rng.index(3));
            int start = 1 + static_cast<int>(rng.index(5));
            for (int h = 0; h < hunks; ++h) {
                std::string ops;
                std::size_t len = 1 + rng.index(6);
                for (std::size_t i = 0; i < len; ++i)
                    ops += "cda"[rng.index(3)];
                if (round % 7 == 0) { // keep some diffs addition-only
                    for (auto& op : ops)
                        if (op == 'd')
                            op = 'a';
                }
                b.hunk(start, ops);
                start += static_cast<int>(ops.size()) + 2 + static_cast<int>(rng.index(10));
            }
        }
        CAPTURE(round);
        CAPTURE(b.text);
        CHECK(parse_diff(b.text) == b.expected);
    }
}

TEST_CASE("empty truth labels the candidate as zero") {
    Rng rng(11);
    auto cand = make_candidate(0, rng);
    GroundTruth truth;
    auto outcome = label_candidate(cand, truth);
    CHECK(!outcome.labeled);
    CHECK(cand.label.empty());
}

TEST_CASE("statements on vulnerable lines are labeled by index") {
    SemanticCandidate c;
    c.id = "FC:main.c:25:5";
    c.kind = CandidateKind::FunctionCall;
    c.file = "main.c";
    c.line = 25;
    for (int i = 0; i < 5; ++i) {
        CandidateStatement st;
        st.text = "%" + std::to_string(i + 1) + " = add i32 0, 1";
        st.source_file = "main.c";
        st.source_line = 20 + i; // lines 20..24
        c.statements.push_back(st);
    }
    c.statements[2].source_line = 23;
    c.statements[3].source_line = 23;

    GroundTruth truth;
    truth.is_vulnerable = true;
    truth.vulnerable_lines = {{"main.c", 23}};
    auto outcome = label_candidate(c, truth);
    CHECK(outcome.labeled);
    CHECK(c.label == std::vector<int>{3, 4});
}

TEST_CASE("a vulnerable line with no sliced statement warns and labels zero") {
    SemanticCandidate c;
    c.id = "AD:main.c:10:10";
    c.kind = CandidateKind::ArrayDef;
    c.file = "main.c";
    c.line = 10;
    CandidateStatement st;
    st.text = "%1 = alloca i32";
    st.source_file = "main.c";
    st.source_line = 10;
    c.statements.push_back(st);

    GroundTruth truth;
    truth.is_vulnerable = true;
    truth.vulnerable_lines = {{"main.c", 99}};
    auto outcome = label_candidate(c, truth);
    CHECK(!outcome.labeled);
    CHECK(c.label.empty());
    CHECK(!outcome.warning.empty());
}

TEST_CASE("addition-only programs yield zero labeled candidates") {
    SemanticCandidate c;
    c.id = "PD:main.c:2:14";
    c.kind = CandidateKind::PointerDef;
    c.file = "main.c";
    c.line = 2;
    CandidateStatement st;
    st.text = "%1 = alloca i32";
    st.source_file = "main.c";
    st.source_line = 2;
    c.statements.push_back(st);

    GroundTruth truth;
    truth.is_vulnerable = true;
    truth.addition_only = true;
    truth.vulnerable_lines = {{"main.c", 2}};
    auto outcome = label_candidate(c, truth);
    CHECK(!outcome.labeled);
    CHECK(c.label.empty());
}

TEST_CASE("truth directories load annotations and diffs") {
    auto truth = load_ground_truth(fixture("demo/truth"));
    CHECK(truth.is_vulnerable);
    CHECK(truth.vulnerable_lines.count({"main.c", 25}) == 1);
    CHECK(truth.source == GroundTruth::Source::DirectAnnotation);
}

TEST_CASE("corpus round-trip is byte-identical") {
    Rng rng(77);
    Corpus corpus;
    corpus.labeled = true;
    for (int i = 0; i < 100; ++i) {
        corpus.candidates.push_back(make_candidate(i, rng));
        corpus.excluded.push_back(rng.uniform() < 0.1);
    }
    std::string once = write_corpus(corpus);
    Corpus back = read_corpus(once);
    REQUIRE(back.size() == corpus.size());
    std::string twice = write_corpus(back);
    CHECK(once == twice);
}

TEST_CASE("an empty corpus is just the version header") {
    Corpus corpus;
    CHECK(write_corpus(corpus) == "# vulnloc-corpus v1\n");
    auto back = read_corpus("# vulnloc-corpus v1\n");
    CHECK(back.size() == 0);
}

TEST_CASE("corrupt records are rejected with the record id") {
    std::string text = "# vulnloc-corpus v1\n"
                       "### FC:a.c:3:1 FC a.c:3 label=9\n"
                       "1\ta.c:3\t%1 = add i32 0, 1\n\n";
    try {
        read_corpus(text);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("FC:a.c:3:1") != std::string::npos);
    }
    CHECK_THROWS_AS(read_corpus("no header\n"), FormatError);
}

TEST_CASE("label consistency: labeled indices carry matching provenance") {
    Rng rng(31337);
    GroundTruth truth;
    truth.is_vulnerable = true;
    for (int line = 1; line <= 40; ++line)
        if (rng.uniform() < 0.2)
            truth.vulnerable_lines.insert({"f1.c", line});

    auto cand = make_candidate(1, rng);
    label_candidate(cand, truth);
    for (int idx : cand.label) {
        const auto& st = cand.statements[idx - 1];
        CHECK(st.has_provenance());
        CHECK(truth.vulnerable_lines.count({st.source_file, st.source_line}) == 1);
    }
}

TEST_CASE("the corpus format holds six-figure record counts") {
    Corpus corpus;
    corpus.labeled = true;
    const int count = 119782;
    corpus.candidates.reserve(count);
    for (int i = 0; i < count; ++i) {
        SemanticCandidate c;
        c.kind = CandidateKind::PointerDef;
        c.file = "p.c";
        c.line = 1 + i % 500;
        c.column = 1;
        c.id = "PD:p.c:" + std::to_string(c.line) + ":" + std::to_string(i);
        c.anchor_index = 0;
        CandidateStatement st;
        st.text = "%1 = alloca i32";
        st.source_file = "p.c";
        st.source_line = c.line;
        c.statements.push_back(std::move(st));
        corpus.candidates.push_back(std::move(c));
        corpus.excluded.push_back(false);
    }
    auto text = write_corpus(corpus);
    auto back = read_corpus(text);
    CHECK(back.size() == static_cast<std::size_t>(count));
}
