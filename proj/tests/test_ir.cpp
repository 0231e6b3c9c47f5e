#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "vulnloc/errors.hpp"
#include "vulnloc/ir.hpp"
#include "vulnloc/rng.hpp"
#include "vulnloc/text.hpp"

using namespace vulnloc;

namespace {

std::string fixture(const std::string& rel) { return std::string(FIXTURE_DIR) + "/" + rel; }

IrModule parse_snippet(const std::string& body, const std::string& name = "snip.ll") {
    return parse_ll(body, name);
}

} // namespace

TEST_CASE("parsing an icmp statement captures fields") {
    auto m = parse_snippet("define i32 @f(i32 %0) {\n"
                           "  %2 = alloca i32\n"
                           "  store i32 %0, i32* %2\n"
                           "  %5 = load i32, i32* %2\n"
                           "  %6 = icmp slt i32 100, %5\n"
                           "  ret i32 0\n"
                           "}\n");
    REQUIRE(m.functions.size() == 1);
    const auto& st = m.functions[0].statements[3];
    CHECK(st.result == "6");
    CHECK(st.opcode == "icmp");
    REQUIRE(st.operands.size() == 4);
    CHECK(st.operands[0].kind == OperandKind::Word);
    CHECK(st.operands[0].text == "slt");
    CHECK(st.operands[1].kind == OperandKind::Type);
    CHECK(st.operands[1].text == "i32");
    CHECK(st.operands[2].kind == OperandKind::Constant);
    CHECK(st.operands[2].text == "100");
    CHECK(st.operands[3].kind == OperandKind::LocalRef);
    CHECK(st.operands[3].text == "5");
}

TEST_CASE("a void call has a callee and no result") {
    auto m = parse_snippet("define void @g() {\n"
                           "  call void @printLine()\n"
                           "  ret void\n"
                           "}\n"
                           "declare void @printLine()\n");
    const auto& st = m.functions[0].statements[0];
    CHECK(!st.result.has_value());
    CHECK(st.opcode == "call");
    CHECK(st.callee == "printLine");
    CHECK(m.declared_externals.count("printLine") == 1);
}

TEST_CASE("an empty function parses cleanly with zero statements") {
    auto m = parse_snippet("define void @empty() {\n}\n");
    REQUIRE(m.functions.size() == 1);
    CHECK(m.functions[0].statements.empty());
}

TEST_CASE("duplicate SSA definitions are rejected") {
    CHECK_THROWS_AS(parse_snippet("define void @f() {\n"
                                  "  %1 = alloca i32\n"
                                  "  %1 = alloca i32\n"
                                  "  ret void\n"
                                  "}\n"),
                    ParseError);
}

TEST_CASE("use before definition is rejected") {
    CHECK_THROWS_AS(parse_snippet("define void @f() {\n"
                                  "  %1 = add i32 %2, 1\n"
                                  "  %2 = add i32 1, 1\n"
                                  "  ret void\n"
                                  "}\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_snippet("define void @f() {\n"
                                  "  %1 = add i32 %9, 1\n"
                                  "  ret void\n"
                                  "}\n"),
                    ParseError);
}

TEST_CASE("phi incoming values may reference later definitions") {
    auto m = parse_snippet("define i32 @loop() {\n"
                           "  br label %1\n"
                           "1:\n"
                           "  %2 = phi i32 [ 0, %0 ], [ %3, %1 ]\n"
                           "  %3 = add i32 %2, 1\n"
                           "  %4 = icmp slt i32 %3, 10\n"
                           "  br i1 %4, label %1, label %5\n"
                           "5:\n"
                           "  ret i32 %3\n"
                           "}\n");
    const auto& phi = m.functions[0].statements[1];
    REQUIRE(phi.phi_incoming.size() == 2);
    CHECK(phi.phi_incoming[0].first == "0");
    CHECK(phi.phi_incoming[0].second == "0");
    CHECK(phi.phi_incoming[1].first == "%3");
    CHECK(phi.phi_incoming[1].second == "1");
}

TEST_CASE("rendering reproduces the statement sequence byte for byte") {
    auto text = read_file(fixture("demo/ir/main.ll"));
    auto m = parse_ll(text, "main.ll");
    CHECK(m.source_file == "main.c");

    std::string rendered;
    for (const auto& fn : m.functions)
        rendered += render_statements(fn);

    // Statement lines of the input: inside function bodies, skipping blanks,
    // comments, and labels (none in this fixture).
    std::string expected;
    bool in_fn = false;
    for (const auto& line : split(text, '\n')) {
        auto t = trim(line);
        if (t.starts_with("define")) {
            in_fn = true;
            continue;
        }
        if (t == "}") {
            in_fn = false;
            continue;
        }
        if (in_fn && !t.empty() && t.front() != ';')
            expected += line + "\n";
    }
    CHECK(rendered == expected);
}

TEST_CASE("debug lines resolve through DILocation nodes") {
    auto text = read_file(fixture("demo/ir/main.ll"));
    auto m = parse_ll(text, "main.ll");
    const IrFunction* main_fn = m.find_function("main");
    REQUIRE(main_fn != nullptr);
    REQUIRE(main_fn->statements.size() == 22);
    CHECK(main_fn->statements[0].debug->line == 10);
    CHECK(main_fn->statements[6].debug->line == 14); // icmp
    CHECK(main_fn->statements[21].debug->line == 27);
    const IrFunction* pl = m.find_function("printLine");
    REQUIRE(pl != nullptr);
    CHECK(pl->internal_linkage);
    CHECK(pl->statements[0].debug->line == 6);
}

TEST_CASE("linking groups modules by symbol references") {
    auto a = parse_ll("define void @main() {\n  call void @helper()\n  ret void\n}\n"
                      "declare void @helper()\n",
                      "a.ll");
    auto b = parse_ll("define void @helper() {\n  ret void\n}\n", "b.ll");
    auto c = parse_ll("define void @lonely() {\n  ret void\n}\n", "c.ll");

    SUBCASE("a call edge merges two modules; unrelated ones stay apart") {
        auto groups = group_and_link({a, b, c});
        REQUIRE(groups.size() == 2);
        CHECK(groups[0].members == std::vector<int>{0, 1});
        CHECK(groups[1].members == std::vector<int>{2});
        auto target = groups[0].resolve_call(0, "helper");
        REQUIRE(target.has_value());
        CHECK(target->first == 1);
    }
    SUBCASE("two independent modules give singleton groups") {
        auto groups = group_and_link({b, c});
        CHECK(groups.size() == 2);
    }
}

TEST_CASE("a five-module call chain links into one group") {
    std::vector<IrModule> modules;
    for (int i = 0; i < 5; ++i) {
        std::string text = "define void @f" + std::to_string(i) + "() {\n";
        if (i + 1 < 5)
            text += "  call void @f" + std::to_string(i + 1) + "()\n";
        text += "  ret void\n}\n";
        modules.push_back(parse_ll(text, "m" + std::to_string(i) + ".ll"));
    }
    auto groups = group_and_link(modules);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].members.size() == 5);
}

TEST_CASE("random reference graphs match brute-force connected components") {
    Rng rng(20240811);
    for (int round = 0; round < 30; ++round) {
        int n = 2 + static_cast<int>(rng.index(7));
        std::vector<std::vector<int>> calls(n);
        std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && rng.uniform() < 0.18) {
                    calls[i].push_back(j);
                    adj[i][j] = adj[j][i] = true; // linkage is undirected
                }
        std::vector<IrModule> modules;
        for (int i = 0; i < n; ++i) {
            std::string text = "define void @f" + std::to_string(i) + "() {\n";
            for (int j : calls[i])
                text += "  call void @f" + std::to_string(j) + "()\n";
            text += "  ret void\n}\n";
            modules.push_back(parse_ll(text, "m" + std::to_string(i) + ".ll"));
        }
        auto groups = group_and_link(modules);

        // Brute-force components by repeated sweep.
        std::vector<int> comp(n, -1);
        int next = 0;
        for (int i = 0; i < n; ++i) {
            if (comp[i] != -1)
                continue;
            comp[i] = next;
            bool changed = true;
            while (changed) {
                changed = false;
                for (int x = 0; x < n; ++x)
                    if (comp[x] == next)
                        for (int y = 0; y < n; ++y)
                            if (adj[x][y] && comp[y] == -1) {
                                comp[y] = next;
                                changed = true;
                            }
            }
            ++next;
        }
        REQUIRE(static_cast<int>(groups.size()) == next);

        // The output partitions the module set.
        std::vector<bool> seen(n, false);
        for (const auto& g : groups)
            for (int mi : g.members) {
                CHECK(!seen[mi]);
                seen[mi] = true;
            }
        CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));

        // Members agree with the brute-force component of their first member.
        for (const auto& g : groups)
            for (int mi : g.members)
                CHECK(comp[mi] == comp[g.members[0]]);
    }
}

TEST_CASE("duplicate external definitions in one group fail to link") {
    auto a = parse_ll("define void @f() {\n  call void @g()\n  ret void\n}\n"
                      "declare void @g()\n",
                      "a.ll");
    auto b = parse_ll("define void @f() {\n  ret void\n}\n"
                      "define void @g() {\n  ret void\n}\n",
                      "b.ll");
    CHECK_THROWS_AS(group_and_link({a, b}), LinkError);
}

TEST_CASE("internal functions with one name may coexist across modules") {
    auto a = parse_ll("define internal void @util() {\n  ret void\n}\n"
                      "define void @entry() {\n  call void @util()\n  call void @shared()\n"
                      "  ret void\n}\n"
                      "declare void @shared()\n",
                      "a.ll");
    auto b = parse_ll("define internal void @util() {\n  ret void\n}\n"
                      "define void @shared() {\n  call void @util()\n  ret void\n}\n",
                      "b.ll");
    auto groups = group_and_link({a, b});
    REQUIRE(groups.size() == 1);
    auto from_a = groups[0].resolve_call(0, "util");
    auto from_b = groups[0].resolve_call(1, "util");
    REQUIRE(from_a.has_value());
    REQUIRE(from_b.has_value());
    CHECK(from_a->first == 0);
    CHECK(from_b->first == 1);
}

TEST_CASE("source lines map to tagged statements") {
    auto text = read_file(fixture("demo/ir/main.ll"));
    std::vector<IrModule> modules = {parse_ll(text, "main.ll")};
    auto groups = group_and_link(modules);
    REQUIRE(groups.size() == 1);

    SUBCASE("the assignment line maps to its gep and store") {
        auto refs = map_source_line(groups[0], modules, "main.c", 19);
        REQUIRE(refs.size() == 2);
        for (const auto& ref : refs) {
            const auto& st = modules[0].functions[ref.function].statements[ref.index];
            bool expected = st.raw_text.find("getelementptr inbounds i8") != std::string::npos ||
                            st.raw_text.find("store i8* %11") != std::string::npos;
            CHECK(expected);
        }
    }
    SUBCASE("a comment-only line maps to nothing") {
        CHECK(map_source_line(groups[0], modules, "main.c", 17).empty());
    }
    SUBCASE("a line tagged in two contexts returns all statements") {
        auto dup = parse_ll("define void @f() {\n"
                            "  %1 = alloca i32, !dbg !1\n"
                            "  ret void\n"
                            "}\n"
                            "define void @g() {\n"
                            "  %1 = alloca i32, !dbg !1\n"
                            "  ret void\n"
                            "}\n"
                            "!1 = !DILocation(line: 3, scope: !9)\n",
                            "dup.ll");
        std::vector<IrModule> mods = {dup};
        auto g2 = group_and_link(mods);
        auto refs = map_source_line(g2[0], mods, "dup.ll", 3);
        CHECK(refs.size() == 2);
    }
}
