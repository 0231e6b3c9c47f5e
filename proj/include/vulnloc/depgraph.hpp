#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vulnloc/ir.hpp"

namespace vulnloc {

enum class DepKind { Data, Control, Call, Param };

const char* dep_kind_name(DepKind k);

// Statement-level dependence graph over a LinkedModule: SSA def-use and
// memory data edges, control edges from post-dominance, and interprocedural
// call/param edges for functions defined inside the group.
struct DependenceGraph {
    using EdgeSet = std::set<std::pair<StatementRef, DepKind>>;

    std::vector<StatementRef> nodes;
    std::map<StatementRef, EdgeSet> out_edges;
    std::map<StatementRef, EdgeSet> in_edges;

    void add_node(const StatementRef& ref);
    void add_edge(const StatementRef& from, const StatementRef& to, DepKind kind);
    bool has_edge(const StatementRef& from, const StatementRef& to, DepKind kind) const;
    std::size_t edge_count() const;

    // `from<TAB>to<TAB>kind` per edge; refs render as module:function:index.
    std::string dump() const;
};

DependenceGraph build_dependence_graph(const LinkedModule& linked,
                                       const std::vector<IrModule>& modules);

} // namespace vulnloc
