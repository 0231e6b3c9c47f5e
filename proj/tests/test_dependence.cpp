#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "support/oracles.hpp"
#include "vulnloc/cfg.hpp"
#include "vulnloc/depgraph.hpp"
#include "vulnloc/errors.hpp"
#include "vulnloc/ir.hpp"
#include "vulnloc/rng.hpp"
#include "vulnloc/text.hpp"

using namespace vulnloc;

namespace {

std::string fixture(const std::string& rel) { return std::string(FIXTURE_DIR) + "/" + rel; }

struct GraphFixture {
    std::vector<IrModule> modules;
    std::vector<LinkedModule> groups;
    DependenceGraph graph;
};

GraphFixture graph_of(const std::string& ll) {
    GraphFixture fx;
    fx.modules.push_back(parse_ll(ll, "g.ll"));
    fx.groups = group_and_link(fx.modules);
    fx.graph = build_dependence_graph(fx.groups[0], fx.modules);
    return fx;
}

} // namespace

TEST_CASE("a straight-line function is a single block") {
    auto m = parse_ll(read_file(fixture("demo/ir/main.ll")), "main.ll");
    Cfg cfg = build_cfg(*m.find_function("main"));
    REQUIRE(cfg.blocks.size() == 1);
    CHECK(cfg.successors[0] == std::vector<int>{cfg.virtual_exit()});
}

TEST_CASE("if/else lowers to a diamond of four blocks") {
    auto m = parse_ll("define i32 @f(i32 %0) {\n"
                      "  %2 = icmp slt i32 %0, 0\n"
                      "  br i1 %2, label %3, label %5\n"
                      "3:\n"
                      "  %4 = add i32 %0, 1\n"
                      "  br label %7\n"
                      "5:\n"
                      "  %6 = add i32 %0, 2\n"
                      "  br label %7\n"
                      "7:\n"
                      "  %8 = phi i32 [ %4, %3 ], [ %6, %5 ]\n"
                      "  ret i32 %8\n"
                      "}\n",
                      "d.ll");
    Cfg cfg = build_cfg(m.functions[0]);
    REQUIRE(cfg.blocks.size() == 4);
    CHECK(cfg.successors[0].size() == 2);
    CHECK(cfg.successors[1] == std::vector<int>{3});
    CHECK(cfg.successors[2] == std::vector<int>{3});

    auto ipdom = post_dominators(cfg);
    CHECK(ipdom[1] == 3); // both arms post-dominated by the join
    CHECK(ipdom[2] == 3);
    CHECK(ipdom[0] == 3);
    CHECK(ipdom[3] == cfg.virtual_exit());
}

TEST_CASE("a loop with a conditional break has a back edge") {
    auto m = parse_ll("define void @f() {\n"
                      "  br label %1\n"
                      "1:\n"
                      "  %2 = phi i32 [ 0, %0 ], [ %3, %1 ]\n"
                      "  %3 = add i32 %2, 1\n"
                      "  %4 = icmp slt i32 %3, 10\n"
                      "  br i1 %4, label %1, label %5\n"
                      "5:\n"
                      "  ret void\n"
                      "}\n",
                      "loop.ll");
    Cfg cfg = build_cfg(m.functions[0]);
    REQUIRE(cfg.blocks.size() == 3);
    bool back_edge = false;
    for (int s : cfg.successors[1])
        if (s == 1)
            back_edge = true;
    CHECK(back_edge);

    // Brute-force reachability agrees with edge enumeration.
    auto live = oracle::live_subgraph(cfg);
    CHECK(oracle::reachable(cfg, 1, 1, live));
    CHECK(oracle::reachable(cfg, 0, cfg.virtual_exit(), live));
}

TEST_CASE("a block without a terminator is a structural error") {
    auto m = parse_ll("define void @f() {\n"
                      "  %1 = add i32 1, 2\n"
                      "}\n",
                      "bad.ll");
    CHECK_THROWS_AS(build_cfg(m.functions[0]), ParseError);
}

TEST_CASE("straight-line post-dominators chain to the exit") {
    auto m = parse_ll("define void @f() {\n"
                      "  br label %1\n"
                      "1:\n"
                      "  br label %2\n"
                      "2:\n"
                      "  ret void\n"
                      "}\n",
                      "line.ll");
    Cfg cfg = build_cfg(m.functions[0]);
    auto ipdom = post_dominators(cfg);
    CHECK(ipdom[0] == 1);
    CHECK(ipdom[1] == 2);
    CHECK(ipdom[2] == cfg.virtual_exit());
}

TEST_CASE("control dependence equals the path-enumeration definition on random graphs") {
    Rng rng(424242);
    for (int round = 0; round < 60; ++round) {
        Cfg cfg = oracle::random_cfg(rng, 8);
        auto expected = oracle::control_dependences(cfg);
        auto got_vec = control_dependences(cfg);
        std::set<std::pair<int, int>> got(got_vec.begin(), got_vec.end());
        CAPTURE(round);
        CHECK(got == expected);
    }
}

TEST_CASE("def-use and memory edges on a three-statement function") {
    auto fx = graph_of("define void @f(i32 %x) {\n"
                       "  %1 = alloca i32\n"
                       "  store i32 %x, i32* %1\n"
                       "  %2 = load i32, i32* %1\n"
                       "  ret void\n"
                       "}\n");
    StatementRef alloc{0, 0, 0}, store{0, 0, 1}, load{0, 0, 2};
    CHECK(fx.graph.has_edge(alloc, store, DepKind::Data)); // def -> use
    CHECK(fx.graph.has_edge(alloc, load, DepKind::Data));
    CHECK(fx.graph.has_edge(store, load, DepKind::Data)); // memory write -> read
    CHECK(!fx.graph.has_edge(load, store, DepKind::Data));
}

TEST_CASE("guarded statements are control-dependent on their branch") {
    auto fx = graph_of("define void @f(i32 %x) {\n"
                       "  %1 = icmp slt i32 %x, 0\n"
                       "  br i1 %1, label %2, label %4\n"
                       "2:\n"
                       "  %3 = add i32 %x, 1\n"
                       "  br label %4\n"
                       "4:\n"
                       "  ret void\n"
                       "}\n");
    StatementRef branch{0, 0, 1}, guarded{0, 0, 2};
    CHECK(fx.graph.has_edge(branch, guarded, DepKind::Control));
}

TEST_CASE("independent functions stay unconnected") {
    auto fx = graph_of("define void @a() {\n  %1 = add i32 1, 2\n  ret void\n}\n"
                       "define void @b() {\n  %1 = add i32 3, 4\n  ret void\n}\n");
    for (const auto& [from, edges] : fx.graph.out_edges)
        for (const auto& [to, kind] : edges) {
            (void)kind;
            CHECK(from.function == to.function);
        }
}

TEST_CASE("interprocedural edges connect calls, params, and returns") {
    auto fx = graph_of("define i32 @callee(i32 %x) {\n"
                       "  %2 = add i32 %x, 1\n"
                       "  ret i32 %2\n"
                       "}\n"
                       "define void @caller() {\n"
                       "  %1 = add i32 4, 5\n"
                       "  %2 = call i32 @callee(i32 %1)\n"
                       "  ret void\n"
                       "}\n");
    StatementRef arg_def{0, 1, 0}, call{0, 1, 1};
    StatementRef callee_entry{0, 0, 0}, callee_ret{0, 0, 1};
    CHECK(fx.graph.has_edge(call, callee_entry, DepKind::Call));
    CHECK(fx.graph.has_edge(arg_def, callee_entry, DepKind::Param)); // %x used at entry
    CHECK(fx.graph.has_edge(callee_ret, call, DepKind::Data));       // return -> result
}

TEST_CASE("data edges re-derive from operands") {
    auto text = read_file(fixture("demo/ir/main.ll"));
    std::vector<IrModule> modules = {parse_ll(text, "main.ll")};
    auto groups = group_and_link(modules);
    auto g = build_dependence_graph(groups[0], modules);

    for (const auto& [from, edges] : g.out_edges) {
        const auto& from_st = modules[0].functions[from.function].statements[from.index];
        for (const auto& [to, kind] : edges) {
            if (kind != DepKind::Data)
                continue;
            const auto& to_st = modules[0].functions[to.function].statements[to.index];
            bool def_use = false;
            if (from_st.result && from.function == to.function)
                for (const auto& op : to_st.operands)
                    if (op.kind == OperandKind::LocalRef && op.text == *from_st.result)
                        def_use = true;
            bool memory = (from_st.opcode == "store" || from_st.is_call()) &&
                          (to_st.opcode == "load" || to_st.is_call());
            bool ret_value = from_st.opcode == "ret";
            CHECK((def_use || memory || ret_value));
        }
    }
}

TEST_CASE("graph construction is deterministic and idempotent") {
    auto text = read_file(fixture("demo/ir/main.ll"));
    std::vector<IrModule> modules = {parse_ll(text, "main.ll")};
    auto groups = group_and_link(modules);
    auto g1 = build_dependence_graph(groups[0], modules);
    auto g2 = build_dependence_graph(groups[0], modules);
    CHECK(g1.dump() == g2.dump());
    CHECK(g1.edge_count() == g2.edge_count());
}
