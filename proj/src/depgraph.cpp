#include "vulnloc/depgraph.hpp"

#include <sstream>

#include "vulnloc/cfg.hpp"

namespace vulnloc {

const char* dep_kind_name(DepKind k) {
    switch (k) {
    case DepKind::Data: return "data";
    case DepKind::Control: return "control";
    case DepKind::Call: return "call";
    case DepKind::Param: return "param";
    }
    return "?";
}

void DependenceGraph::add_node(const StatementRef& ref) {
    nodes.push_back(ref);
    out_edges[ref];
    in_edges[ref];
}

void DependenceGraph::add_edge(const StatementRef& from, const StatementRef& to, DepKind kind) {
    out_edges[from].insert({to, kind});
    in_edges[to].insert({from, kind});
}

bool DependenceGraph::has_edge(const StatementRef& from, const StatementRef& to,
                               DepKind kind) const {
    auto it = out_edges.find(from);
    return it != out_edges.end() && it->second.count({to, kind}) > 0;
}

std::size_t DependenceGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& [ref, edges] : out_edges)
        n += edges.size();
    return n;
}

std::string DependenceGraph::dump() const {
    std::ostringstream out;
    auto render = [](const StatementRef& r) {
        return std::to_string(r.module) + ":" + std::to_string(r.function) + ":" +
               std::to_string(r.index);
    };
    for (const auto& [from, edges] : out_edges)
        for (const auto& [to, kind] : edges)
            out << render(from) << '\t' << render(to) << '\t' << dep_kind_name(kind) << '\n';
    return out.str();
}

namespace {

// A memory root: either a statement that produces a fresh address (alloca,
// call result, unrecognized producer) or a global/parameter name.
struct Root {
    int module = -1;
    int function = -1;
    int index = -1;       // defining statement, or -1 for named roots
    std::string name;     // global or parameter name when index == -1

    auto operator<=>(const Root&) const = default;
};

using RootSet = std::set<Root>;

const std::set<std::string> kPassThrough = {
    "getelementptr", "bitcast", "addrspacecast", "inttoptr", "ptrtoint",
    "zext",          "sext",    "trunc",         "select",   "phi",
};

class GraphBuilder {
  public:
    GraphBuilder(const LinkedModule& linked, const std::vector<IrModule>& modules)
        : linked_(linked), modules_(modules) {}

    DependenceGraph run() {
        for (int mi : linked_.members) {
            const IrModule& m = modules_[mi];
            for (std::size_t fi = 0; fi < m.functions.size(); ++fi)
                for (std::size_t si = 0; si < m.functions[fi].statements.size(); ++si)
                    graph_.add_node({mi, static_cast<int>(fi), static_cast<int>(si)});
        }
        compute_value_roots();
        add_def_use_edges();
        add_memory_edges();
        add_control_edges();
        add_interprocedural_edges();
        return std::move(graph_);
    }

  private:
    const LinkedModule& linked_;
    const std::vector<IrModule>& modules_;
    DependenceGraph graph_;

    // (module, function, local name) -> roots the value may point to.
    std::map<std::tuple<int, int, std::string>, RootSet> value_roots_;
    // memory root -> roots of pointer values stored into it.
    std::map<Root, RootSet> stored_roots_;

    const IrFunction& fn(int mi, int fi) const { return modules_[mi].functions[fi]; }

    std::map<std::string, std::size_t> def_index(const IrFunction& f) const {
        std::map<std::string, std::size_t> defs;
        for (std::size_t s = 0; s < f.statements.size(); ++s)
            if (f.statements[s].result)
                defs[*f.statements[s].result] = s;
        return defs;
    }

    std::vector<std::string> local_refs(const IrStatement& st) const {
        std::vector<std::string> out;
        for (const auto& op : st.operands)
            if (op.kind == OperandKind::LocalRef)
                out.push_back(op.text);
        return out;
    }

    RootSet roots_of_local(int mi, int fi, const std::string& name) const {
        auto it = value_roots_.find({mi, fi, name});
        return it == value_roots_.end() ? RootSet{} : it->second;
    }

    RootSet roots_of_operand(int mi, int fi, const IrOperand& op) const {
        if (op.kind == OperandKind::LocalRef)
            return roots_of_local(mi, fi, op.text);
        if (op.kind == OperandKind::GlobalRef)
            return {Root{-1, -1, -1, op.text}};
        return {};
    }

    // Flow-insensitive points-to over base values: allocas, globals, call
    // results, and parameters are roots; conversions and gep chains pass
    // through; loads pick up the roots of values stored to their address.
    void compute_value_roots() {
        // Seed roots.
        for (int mi : linked_.members)
            for (std::size_t fi = 0; fi < modules_[mi].functions.size(); ++fi) {
                const IrFunction& f = fn(mi, static_cast<int>(fi));
                for (const auto& p : f.params)
                    value_roots_[{mi, static_cast<int>(fi), p}] = {
                        Root{mi, static_cast<int>(fi), -1, "param:" + p}};
                for (std::size_t si = 0; si < f.statements.size(); ++si) {
                    const IrStatement& st = f.statements[si];
                    if (!st.result)
                        continue;
                    if (st.opcode == "alloca" || st.is_call() ||
                        kPassThrough.count(st.opcode) == 0)
                        value_roots_[{mi, static_cast<int>(fi), *st.result}] = {
                            Root{mi, static_cast<int>(fi), static_cast<int>(si), ""}};
                }
            }
        // Propagate to fixpoint.
        bool changed = true;
        while (changed) {
            changed = false;
            for (int mi : linked_.members)
                for (std::size_t fi = 0; fi < modules_[mi].functions.size(); ++fi) {
                    const IrFunction& f = fn(mi, static_cast<int>(fi));
                    for (const auto& st : f.statements) {
                        if (st.result && kPassThrough.count(st.opcode) && !st.is_call()) {
                            RootSet merged;
                            for (const auto& op : st.operands)
                                if (op.kind == OperandKind::LocalRef ||
                                    op.kind == OperandKind::GlobalRef)
                                    for (const auto& r :
                                         roots_of_operand(mi, static_cast<int>(fi), op))
                                        merged.insert(r);
                            auto& slot = value_roots_[{mi, static_cast<int>(fi), *st.result}];
                            for (const auto& r : merged)
                                changed |= slot.insert(r).second;
                        }
                        if (st.opcode == "store") {
                            auto refs = store_value_and_pointer(mi, static_cast<int>(fi), st);
                            for (const auto& target : refs.second) {
                                auto& slot = stored_roots_[target];
                                for (const auto& r : refs.first)
                                    changed |= slot.insert(r).second;
                            }
                        }
                        if (st.result && st.opcode == "load") {
                            RootSet loaded;
                            for (const auto& addr_root : access_roots(mi, static_cast<int>(fi), st))
                                for (const auto& r : stored_roots_[addr_root])
                                    loaded.insert(r);
                            auto& slot = value_roots_[{mi, static_cast<int>(fi), *st.result}];
                            for (const auto& r : loaded)
                                changed |= slot.insert(r).second;
                        }
                    }
                }
        }
    }

    // store: (roots of stored value, roots of target address).
    std::pair<RootSet, RootSet> store_value_and_pointer(int mi, int fi,
                                                        const IrStatement& st) const {
        std::vector<const IrOperand*> refs;
        for (const auto& op : st.operands)
            if (op.kind == OperandKind::LocalRef || op.kind == OperandKind::GlobalRef)
                refs.push_back(&op);
        if (refs.empty())
            return {};
        const IrOperand* pointer = refs.back(); // store <val>, <ptr>
        RootSet value;
        for (std::size_t i = 0; i + 1 < refs.size(); ++i)
            for (const auto& r : roots_of_operand(mi, fi, *refs[i]))
                value.insert(r);
        return {value, roots_of_operand(mi, fi, *pointer)};
    }

    // Memory roots a statement may touch through its pointer operands.
    RootSet access_roots(int mi, int fi, const IrStatement& st) const {
        RootSet out;
        if (st.opcode == "load") {
            std::vector<const IrOperand*> refs;
            for (const auto& op : st.operands)
                if (op.kind == OperandKind::LocalRef || op.kind == OperandKind::GlobalRef)
                    refs.push_back(&op);
            if (!refs.empty())
                out = roots_of_operand(mi, fi, *refs.back());
            return out;
        }
        if (st.opcode == "store")
            return store_value_and_pointer(mi, fi, st).second;
        if (st.is_call()) {
            // Argument pointers: without callee semantics every pointer
            // argument may be both read and written.
            for (const auto& op : st.operands) {
                if (op.kind == OperandKind::GlobalRef && op.text == st.callee)
                    continue;
                for (const auto& r : roots_of_operand(mi, fi, op))
                    out.insert(r);
            }
        }
        return out;
    }

    void add_def_use_edges() {
        for (int mi : linked_.members)
            for (std::size_t fi = 0; fi < modules_[mi].functions.size(); ++fi) {
                const IrFunction& f = fn(mi, static_cast<int>(fi));
                auto defs = def_index(f);
                std::set<std::string> labels;
                for (const auto& l : f.labels)
                    labels.insert(l.name);
                for (std::size_t si = 0; si < f.statements.size(); ++si)
                    for (const auto& name : local_refs(f.statements[si])) {
                        if (labels.count(name))
                            continue;
                        auto it = defs.find(name);
                        if (it != defs.end() && it->second != si)
                            graph_.add_edge({mi, static_cast<int>(fi), static_cast<int>(it->second)},
                                            {mi, static_cast<int>(fi), static_cast<int>(si)},
                                            DepKind::Data);
                    }
            }
    }

    void add_memory_edges() {
        // writers/readers per root: (ref, same-function statement order).
        std::map<Root, std::vector<StatementRef>> writers, readers;
        for (int mi : linked_.members)
            for (std::size_t fi = 0; fi < modules_[mi].functions.size(); ++fi) {
                const IrFunction& f = fn(mi, static_cast<int>(fi));
                for (std::size_t si = 0; si < f.statements.size(); ++si) {
                    const IrStatement& st = f.statements[si];
                    StatementRef ref{mi, static_cast<int>(fi), static_cast<int>(si)};
                    if (st.opcode == "store") {
                        for (const auto& r : access_roots(mi, static_cast<int>(fi), st))
                            writers[r].push_back(ref);
                    } else if (st.opcode == "load") {
                        for (const auto& r : access_roots(mi, static_cast<int>(fi), st))
                            readers[r].push_back(ref);
                    } else if (st.is_call()) {
                        for (const auto& r : access_roots(mi, static_cast<int>(fi), st)) {
                            writers[r].push_back(ref);
                            readers[r].push_back(ref);
                        }
                    }
                }
            }
        for (const auto& [root, ws] : writers) {
            auto it = readers.find(root);
            if (it == readers.end())
                continue;
            for (const auto& w : ws)
                for (const auto& r : it->second) {
                    if (w == r)
                        continue;
                    bool same_fn = w.module == r.module && w.function == r.function;
                    // Same function: forward order only. Across functions the
                    // interleaving is unknown, so both directions connect.
                    if (same_fn && w.index >= r.index)
                        continue;
                    graph_.add_edge(w, r, DepKind::Data);
                }
        }
    }

    void add_control_edges() {
        for (int mi : linked_.members)
            for (std::size_t fi = 0; fi < modules_[mi].functions.size(); ++fi) {
                const IrFunction& f = fn(mi, static_cast<int>(fi));
                if (f.statements.empty())
                    continue;
                Cfg cfg = build_cfg(f);
                for (const auto& [branch_block, dep_block] : control_dependences(cfg)) {
                    std::size_t branch_stmt = cfg.blocks[branch_block].last - 1;
                    for (std::size_t s = cfg.blocks[dep_block].first;
                         s < cfg.blocks[dep_block].last; ++s)
                        if (s != branch_stmt)
                            graph_.add_edge({mi, static_cast<int>(fi), static_cast<int>(branch_stmt)},
                                            {mi, static_cast<int>(fi), static_cast<int>(s)},
                                            DepKind::Control);
                }
                // phi: control edge from the terminator of each incoming block.
                for (std::size_t si = 0; si < f.statements.size(); ++si) {
                    const IrStatement& st = f.statements[si];
                    if (st.opcode != "phi")
                        continue;
                    for (const auto& [value, label] : st.phi_incoming) {
                        (void)value;
                        for (std::size_t b = 0; b < cfg.blocks.size(); ++b)
                            if (cfg.blocks[b].label == label)
                                graph_.add_edge({mi, static_cast<int>(fi),
                                                 static_cast<int>(cfg.blocks[b].last - 1)},
                                                {mi, static_cast<int>(fi), static_cast<int>(si)},
                                                DepKind::Control);
                    }
                }
            }
    }

    void add_interprocedural_edges() {
        for (int mi : linked_.members)
            for (std::size_t fi = 0; fi < modules_[mi].functions.size(); ++fi) {
                const IrFunction& f = fn(mi, static_cast<int>(fi));
                auto defs = def_index(f);
                for (std::size_t si = 0; si < f.statements.size(); ++si) {
                    const IrStatement& st = f.statements[si];
                    if (!st.is_call() || st.callee.empty())
                        continue;
                    auto target = linked_.resolve_call(mi, st.callee);
                    if (!target)
                        continue; // external: slice boundary
                    auto [tm, tf] = *target;
                    const IrFunction& callee = fn(tm, tf);
                    if (callee.statements.empty())
                        continue;
                    StatementRef call_ref{mi, static_cast<int>(fi), static_cast<int>(si)};
                    graph_.add_edge(call_ref, {tm, tf, 0}, DepKind::Call);
                    // Actual argument values flow to the statements using the
                    // formal parameters.
                    for (std::size_t p = 0; p < callee.params.size(); ++p) {
                        StatementRef source = call_ref;
                        if (p < st.call_args.size() && st.call_args[p].size() > 1 &&
                            st.call_args[p][0] == '%') {
                            auto def = defs.find(st.call_args[p].substr(1));
                            if (def != defs.end())
                                source = {mi, static_cast<int>(fi), static_cast<int>(def->second)};
                        }
                        for (std::size_t cs = 0; cs < callee.statements.size(); ++cs)
                            for (const auto& name : local_refs(callee.statements[cs]))
                                if (name == callee.params[p])
                                    graph_.add_edge(source, {tm, tf, static_cast<int>(cs)},
                                                    DepKind::Param);
                    }
                    // Return value -> call result.
                    if (st.result)
                        for (std::size_t cs = 0; cs < callee.statements.size(); ++cs) {
                            const IrStatement& cst = callee.statements[cs];
                            if (cst.opcode == "ret" && !local_refs(cst).empty())
                                graph_.add_edge({tm, tf, static_cast<int>(cs)}, call_ref,
                                                DepKind::Data);
                        }
                }
            }
    }
};

} // namespace

DependenceGraph build_dependence_graph(const LinkedModule& linked,
                                       const std::vector<IrModule>& modules) {
    return GraphBuilder(linked, modules).run();
}

} // namespace vulnloc
