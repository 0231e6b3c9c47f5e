#include "vulnloc/ir.hpp"

#include <algorithm>
#include <numeric>

#include "vulnloc/errors.hpp"

namespace vulnloc {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Every symbol a module mentions: callees, global refs in instructions and in
// global initializers.
std::vector<std::string> referenced_symbols(const IrModule& m) {
    std::vector<std::string> out;
    for (const auto& g : m.globals)
        for (const auto& r : g.referenced_symbols)
            out.push_back(r);
    for (const auto& f : m.functions)
        for (const auto& st : f.statements)
            for (const auto& op : st.operands)
                if (op.kind == OperandKind::GlobalRef)
                    out.push_back(op.text);
    return out;
}

} // namespace

std::optional<std::pair<int, int>> LinkedModule::resolve_call(int from_module,
                                                              const std::string& callee) const {
    auto internal = internal_defs.find({from_module, callee});
    if (internal != internal_defs.end())
        return std::make_pair(from_module, internal->second);
    auto external = external_defs.find(callee);
    if (external != external_defs.end())
        return external->second;
    return std::nullopt;
}

std::vector<LinkedModule> group_and_link(const std::vector<IrModule>& modules) {
    // Externally visible definitions: symbol -> defining module.
    std::map<std::string, std::vector<int>> exported;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        for (const auto& f : modules[i].functions)
            if (f.is_definition && !f.internal_linkage)
                exported[f.name].push_back(static_cast<int>(i));
        for (const auto& g : modules[i].globals)
            if (g.is_definition && !g.internal_linkage)
                exported[g.name].push_back(static_cast<int>(i));
    }

    UnionFind uf(modules.size());
    for (std::size_t i = 0; i < modules.size(); ++i)
        for (const auto& sym : referenced_symbols(modules[i])) {
            auto it = exported.find(sym);
            if (it == exported.end())
                continue;
            for (int def_module : it->second)
                if (def_module != static_cast<int>(i))
                    uf.unite(static_cast<int>(i), def_module);
        }

    std::map<int, LinkedModule> groups;
    for (std::size_t i = 0; i < modules.size(); ++i)
        groups[uf.find(static_cast<int>(i))].members.push_back(static_cast<int>(i));

    std::vector<LinkedModule> out;
    for (auto& [root, lm] : groups) {
        (void)root;
        std::sort(lm.members.begin(), lm.members.end());
        for (int mi : lm.members) {
            const IrModule& m = modules[mi];
            for (std::size_t fi = 0; fi < m.functions.size(); ++fi) {
                const IrFunction& f = m.functions[fi];
                if (!f.is_definition)
                    continue;
                if (f.internal_linkage) {
                    lm.internal_defs[{mi, f.name}] = static_cast<int>(fi);
                } else {
                    auto [it, inserted] =
                        lm.external_defs.emplace(f.name, std::make_pair(mi, static_cast<int>(fi)));
                    if (!inserted)
                        throw LinkError("duplicate definition of @" + f.name + " in " +
                                        modules[it->second.first].path + " and " + m.path);
                }
            }
        }
        out.push_back(std::move(lm));
    }
    return out;
}

std::set<StatementRef> map_source_line(const LinkedModule& linked,
                                       const std::vector<IrModule>& modules,
                                       const std::string& file, int line) {
    std::set<StatementRef> out;
    for (int mi : linked.members) {
        const IrModule& m = modules[mi];
        if (m.source_file != file)
            continue;
        for (std::size_t fi = 0; fi < m.functions.size(); ++fi) {
            const auto& stmts = m.functions[fi].statements;
            for (std::size_t si = 0; si < stmts.size(); ++si)
                if (stmts[si].debug && stmts[si].debug->line == line &&
                    stmts[si].debug->file == file)
                    out.insert({mi, static_cast<int>(fi), static_cast<int>(si)});
        }
    }
    return out;
}

} // namespace vulnloc
