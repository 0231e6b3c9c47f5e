#include "vulnloc/slicer.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

namespace {

bool is_number(const std::string& s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// Replaces %<old> tokens by their mapped spelling, longest-name exact match.
std::string substitute_locals(const std::string& text,
                              const std::map<std::string, std::string>& rename) {
    std::string out;
    std::size_t i = 0;
    auto name_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' ||
               c == '-';
    };
    while (i < text.size()) {
        if (text[i] == '%') {
            std::size_t j = i + 1;
            while (j < text.size() && name_char(text[j]))
                ++j;
            std::string name = text.substr(i + 1, j - i - 1);
            auto it = rename.find(name);
            if (it != rename.end()) {
                out += "%" + it->second;
            } else {
                out += text.substr(i, j - i);
            }
            i = j;
        } else {
            out += text[i++];
        }
    }
    return out;
}

// For calls the anchor names only the callee; for the other kinds every
// identifier of the candidate may match.
std::vector<std::string> candidate_identifiers(const SyntaxCandidate& c) {
    std::vector<std::string> out;
    if (c.kind == CandidateKind::FunctionCall)
        return {c.tokens.front().text};
    for (const auto& t : c.tokens)
        if (t.kind == TokenKind::Identifier)
            out.push_back(t.text);
    return out;
}

bool statement_mentions(const IrStatement& st, const std::string& name) {
    if (st.callee == name)
        return true;
    for (const auto& op : st.operands)
        if (op.kind == OperandKind::GlobalRef && op.text == name)
            return true;
    return false;
}

} // namespace

std::string strip_metadata(const std::string& raw) {
    // Drop `, !dbg !N` style attachments; `!` never occurs earlier in the
    // supported instruction grammar outside of strings.
    std::string trimmed{trim(raw)};
    bool in_string = false;
    for (std::size_t i = 0; i + 1 < trimmed.size(); ++i) {
        if (trimmed[i] == '"' && (i == 0 || trimmed[i - 1] != '\\'))
            in_string = !in_string;
        if (!in_string && trimmed[i] == ',' ) {
            std::size_t j = i + 1;
            while (j < trimmed.size() && trimmed[j] == ' ')
                ++j;
            if (j < trimmed.size() && trimmed[j] == '!')
                return trimmed.substr(0, i);
        }
    }
    return trimmed;
}

std::optional<SliceAnchor> locate_anchor(const SyntaxCandidate& candidate,
                                         const LinkedModule& linked,
                                         const std::vector<IrModule>& modules) {
    SliceAnchor anchor;
    anchor.candidate_id = candidate.id();
    std::set<StatementRef> on_line = map_source_line(linked, modules, candidate.file, candidate.line);
    std::vector<std::string> names = candidate_identifiers(candidate);

    if (!on_line.empty()) {
        for (const auto& ref : on_line) {
            const IrStatement& st =
                modules[ref.module].functions[ref.function].statements[ref.index];
            for (const auto& name : names)
                if (statement_mentions(st, name)) {
                    anchor.statements.insert(ref);
                    break;
                }
        }
        if (anchor.statements.empty())
            anchor.statements = on_line; // no identifier match: take the line
        return anchor;
    }

    // File-scope declarations produce no line-tagged code; a candidate whose
    // identifier names a module global anchors at every statement that uses
    // or defines that global.
    for (const auto& name : names) {
        bool is_global = false;
        for (int mi : linked.members)
            for (const auto& g : modules[mi].globals)
                if (g.name == name)
                    is_global = true;
        if (!is_global)
            continue;
        for (int mi : linked.members) {
            const IrModule& m = modules[mi];
            for (std::size_t fi = 0; fi < m.functions.size(); ++fi)
                for (std::size_t si = 0; si < m.functions[fi].statements.size(); ++si)
                    if (statement_mentions(m.functions[fi].statements[si], name))
                        anchor.statements.insert(
                            {mi, static_cast<int>(fi), static_cast<int>(si)});
        }
    }
    if (anchor.statements.empty())
        return std::nullopt;
    return anchor;
}

std::vector<StatementRef> slice(const DependenceGraph& graph,
                                const std::set<StatementRef>& anchor) {
    // Forward closure: everything affected by the anchor.
    std::set<StatementRef> result(anchor.begin(), anchor.end());
    std::deque<StatementRef> work(anchor.begin(), anchor.end());
    while (!work.empty()) {
        StatementRef ref = work.front();
        work.pop_front();
        auto it = graph.out_edges.find(ref);
        if (it == graph.out_edges.end())
            continue;
        for (const auto& [to, kind] : it->second) {
            (void)kind;
            if (result.insert(to).second)
                work.push_back(to);
        }
    }
    // Backward closure seeded from the whole forward slice: everything the
    // affected statements depend on. Seeding from the forward set (not the
    // anchor alone) keeps the producers of values consumed alongside the
    // anchor, e.g. the size computation feeding a call that overwrites the
    // anchored buffer.
    work.assign(result.begin(), result.end());
    while (!work.empty()) {
        StatementRef ref = work.front();
        work.pop_front();
        auto it = graph.in_edges.find(ref);
        if (it == graph.in_edges.end())
            continue;
        for (const auto& [from, kind] : it->second) {
            (void)kind;
            if (result.insert(from).second)
                work.push_back(from);
        }
    }
    return {result.begin(), result.end()}; // set order == (module, function, index)
}

namespace {

struct FunctionSlice {
    std::vector<StatementRef> refs; // ascending statement index
    // Slice-local renumbering: ids defined by sliced statements first (in
    // definition order, from 1), then free locals (parameters) afterwards.
    std::map<std::string, std::string> rename;
    long max_id = 0;
};

FunctionSlice make_function_slice(const std::vector<StatementRef>& refs,
                                  const std::vector<IrModule>& modules) {
    FunctionSlice fs;
    fs.refs = refs;
    long next = 1;
    for (const auto& ref : refs) {
        const IrStatement& st = modules[ref.module].functions[ref.function].statements[ref.index];
        if (st.result && is_number(*st.result))
            fs.rename[*st.result] = std::to_string(next++);
    }
    for (const auto& ref : refs) {
        const IrStatement& st = modules[ref.module].functions[ref.function].statements[ref.index];
        for (const auto& op : st.operands)
            if (op.kind == OperandKind::LocalRef && is_number(op.text) && !fs.rename.count(op.text))
                fs.rename[op.text] = std::to_string(next++);
    }
    fs.max_id = next - 1;
    return fs;
}

class SliceAssembler {
  public:
    SliceAssembler(const LinkedModule& linked, const std::vector<IrModule>& modules,
                   std::map<std::pair<int, int>, FunctionSlice> slices)
        : linked_(linked), modules_(modules), slices_(std::move(slices)) {}

    void emit_all(SemanticCandidate& out, const std::set<StatementRef>& anchor) {
        // Roots: sliced functions nobody in the slice calls.
        std::set<std::pair<int, int>> called;
        for (const auto& [fn, fs] : slices_)
            for (const auto& ref : fs.refs) {
                (void)fn;
                const IrStatement& st = stmt(ref);
                if (st.is_call() && !st.callee.empty())
                    if (auto target = linked_.resolve_call(ref.module, st.callee))
                        if (slices_.count(*target))
                            called.insert(*target);
            }
        // Mutual recursion can leave every function "called"; break the tie
        // at the first function so something is emitted.
        bool any_root = false;
        for (const auto& [fn, fs] : slices_) {
            (void)fs;
            if (!called.count(fn))
                any_root = true;
        }
        if (!any_root && !slices_.empty())
            called.erase(slices_.begin()->first);

        // All roots share one id space: the first keeps its slice numbering,
        // later ones are renumbered like appended statements.
        std::set<std::string> used;
        bool first_root = true;
        for (const auto& [fn, fs] : slices_) {
            if (called.count(fn))
                continue;
            std::set<std::pair<int, int>> path;
            std::map<std::string, std::string> base;
            if (!first_root) {
                std::map<long, std::string> fresh_for;
                for (long id = 1; id <= fs.max_id; ++id) {
                    long fresh = 1;
                    while (used.count(std::to_string(fresh)))
                        ++fresh;
                    fresh_for[id] = std::to_string(fresh);
                    used.insert(std::to_string(fresh));
                }
                for (const auto& [orig, slice_id] : fs.rename)
                    base[orig] = fresh_for.at(std::stol(slice_id));
            }
            emit_function(fn, out, anchor, path, used, base);
            first_root = false;
        }
    }

  private:
    const LinkedModule& linked_;
    const std::vector<IrModule>& modules_;
    std::map<std::pair<int, int>, FunctionSlice> slices_;

    const IrStatement& stmt(const StatementRef& ref) const {
        return modules_[ref.module].functions[ref.function].statements[ref.index];
    }

    // Emits one function's sliced statements, inlining resolvable callees
    // directly after their call statement. `used` carries every id already
    // spent in this calling context; appended ids take the smallest unused.
    void emit_function(std::pair<int, int> fn, SemanticCandidate& out,
                       const std::set<StatementRef>& anchor,
                       std::set<std::pair<int, int>>& path, std::set<std::string>& used,
                       const std::map<std::string, std::string>& base_rename) {
        const FunctionSlice& fs = slices_.at(fn);
        path.insert(fn);
        const IrFunction& f = modules_[fn.first].functions[fn.second];
        out.functions_involved.push_back(f.name);

        std::map<std::string, std::string> rename = base_rename.empty() ? fs.rename : base_rename;
        for (const auto& [old_id, new_id] : rename) {
            (void)old_id;
            used.insert(new_id);
        }

        for (const auto& ref : fs.refs) {
            const IrStatement& st = stmt(ref);
            CandidateStatement rendered;
            rendered.text = substitute_locals(strip_metadata(st.raw_text), rename);
            if (st.debug) {
                rendered.source_file = st.debug->file;
                rendered.source_line = st.debug->line;
            }
            out.statements.push_back(rendered);
            if (out.anchor_index < 0 && anchor.count(ref))
                out.anchor_index = static_cast<int>(out.statements.size()) - 1;

            if (st.is_call() && !st.callee.empty()) {
                auto target = linked_.resolve_call(ref.module, st.callee);
                if (target && slices_.count(*target) && !path.count(*target)) {
                    // Fresh ids for the callee, assigned in its own slice
                    // order: the first appended id becomes caller-max + 1.
                    const FunctionSlice& callee = slices_.at(*target);
                    std::map<long, std::string> fresh_for; // callee slice id -> new id
                    for (long id = 1; id <= callee.max_id; ++id) {
                        long fresh = 1;
                        while (used.count(std::to_string(fresh)))
                            ++fresh;
                        fresh_for[id] = std::to_string(fresh);
                        used.insert(std::to_string(fresh));
                    }
                    std::map<std::string, std::string> composed;
                    for (const auto& [orig, slice_id] : callee.rename)
                        composed[orig] = fresh_for.at(std::stol(slice_id));
                    emit_function(*target, out, anchor, path, used, composed);
                }
            }
        }
        path.erase(fn);
    }
};

} // namespace

SemanticCandidate inline_and_renumber(const SyntaxCandidate& candidate,
                                      const std::vector<StatementRef>& sliced,
                                      const std::set<StatementRef>& anchor,
                                      const LinkedModule& linked,
                                      const std::vector<IrModule>& modules) {
    SemanticCandidate out;
    out.id = candidate.id();
    out.kind = candidate.kind;
    out.file = candidate.file;
    out.line = candidate.line;
    out.column = candidate.column;

    // Complete call statements: a sliced callee reached from a sliced caller
    // keeps its call site so the appended statements have a place to go.
    std::set<StatementRef> refs(sliced.begin(), sliced.end());
    bool grew = true;
    while (grew) {
        grew = false;
        std::set<std::pair<int, int>> sliced_fns;
        for (const auto& ref : refs)
            sliced_fns.insert({ref.module, ref.function});
        for (const auto& caller : sliced_fns) {
            const IrFunction& f = modules[caller.first].functions[caller.second];
            for (std::size_t si = 0; si < f.statements.size(); ++si) {
                const IrStatement& st = f.statements[si];
                if (!st.is_call() || st.callee.empty())
                    continue;
                auto target = linked.resolve_call(caller.first, st.callee);
                if (!target || !sliced_fns.count(*target))
                    continue;
                StatementRef call_ref{caller.first, caller.second, static_cast<int>(si)};
                if (refs.insert(call_ref).second)
                    grew = true;
            }
        }
    }

    // Referenced globals become header statements.
    std::set<std::string> global_names;
    for (const auto& ref : refs) {
        const IrStatement& st = modules[ref.module].functions[ref.function].statements[ref.index];
        for (const auto& op : st.operands)
            if (op.kind == OperandKind::GlobalRef)
                global_names.insert(op.text);
    }
    for (int mi : linked.members)
        for (const auto& g : modules[mi].globals)
            if (global_names.count(g.name)) {
                CandidateStatement gs;
                gs.text = strip_metadata(g.raw_text);
                gs.is_global = true;
                out.statements.push_back(gs);
            }

    // Per-function slices in (module, function) order.
    std::map<std::pair<int, int>, FunctionSlice> slices;
    std::map<std::pair<int, int>, std::vector<StatementRef>> by_fn;
    for (const auto& ref : refs)
        by_fn[{ref.module, ref.function}].push_back(ref);
    for (auto& [fn, fn_refs] : by_fn) {
        std::sort(fn_refs.begin(), fn_refs.end());
        slices[fn] = make_function_slice(fn_refs, modules);
    }

    SliceAssembler(linked, modules, std::move(slices)).emit_all(out, anchor);

    std::vector<std::string> unique_fns;
    for (const auto& name : out.functions_involved)
        if (std::find(unique_fns.begin(), unique_fns.end(), name) == unique_fns.end())
            unique_fns.push_back(name);
    out.functions_involved = std::move(unique_fns);
    return out;
}

SemanticBatch build_semantic_candidates(const std::vector<SyntaxCandidate>& candidates,
                           const std::vector<LinkedModule>& groups,
                           const std::vector<IrModule>& modules) {
    SemanticBatch batch;
    // file -> linked group that contains its module.
    std::map<std::string, int> group_of_file;
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        for (int mi : groups[gi].members)
            group_of_file[modules[mi].source_file] = static_cast<int>(gi);

    std::map<int, DependenceGraph> graph_cache;
    for (const auto& cand : candidates) {
        auto git = group_of_file.find(cand.file);
        if (git == group_of_file.end()) {
            batch.skipped.push_back(cand.id());
            continue;
        }
        const LinkedModule& linked = groups[git->second];
        auto anchor = locate_anchor(cand, linked, modules);
        if (!anchor) {
            batch.skipped.push_back(cand.id());
            continue;
        }
        if (!graph_cache.count(git->second))
            graph_cache.emplace(git->second, build_dependence_graph(linked, modules));
        const DependenceGraph& graph = graph_cache.at(git->second);
        auto refs = slice(graph, anchor->statements);
        batch.candidates.push_back(
            inline_and_renumber(cand, refs, anchor->statements, linked, modules));
    }
    return batch;
}

std::string validate_rendered(const SemanticCandidate& candidate) {
    std::map<std::string, std::size_t> def_at;
    std::vector<std::pair<std::string, std::size_t>> uses;
    auto name_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' ||
               c == '-';
    };
    for (std::size_t idx = 0; idx < candidate.statements.size(); ++idx) {
        const std::string& text = candidate.statements[idx].text;
        bool is_phi = text.find(" = phi ") != std::string::npos;
        bool def_seen = false;
        std::size_t i = 0;
        while (i < text.size()) {
            if (text[i] != '%') {
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j < text.size() && name_char(text[j]))
                ++j;
            std::string name = text.substr(i + 1, j - i - 1);
            if (!is_number(name)) { // labels and named values are not checked
                i = j;
                continue;
            }
            std::size_t eq = j;
            while (eq < text.size() && text[eq] == ' ')
                ++eq;
            bool is_def = !def_seen && i == 0 && eq < text.size() && text[eq] == '=';
            if (is_def) {
                if (def_at.count(name))
                    return "duplicate definition of %" + name + " at statement " +
                           std::to_string(idx + 1);
                def_at[name] = idx;
                def_seen = true;
            } else if (!is_phi) { // phi incoming values may come from below
                uses.emplace_back(name, idx);
            }
            i = j;
        }
    }
    for (const auto& [name, idx] : uses) {
        auto it = def_at.find(name);
        if (it != def_at.end() && it->second > idx)
            return "%" + name + " used at statement " + std::to_string(idx + 1) +
                   " before its definition";
    }
    return {};
}

} // namespace vulnloc
