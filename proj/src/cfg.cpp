#include "vulnloc/cfg.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "vulnloc/errors.hpp"

namespace vulnloc {

int Cfg::block_of(std::size_t statement_index) const {
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (statement_index >= blocks[b].first && statement_index < blocks[b].last)
            return static_cast<int>(b);
    return -1;
}

Cfg build_cfg(const IrFunction& fn) {
    Cfg cfg;
    const auto& stmts = fn.statements;
    if (stmts.empty()) {
        cfg.successors.assign(1, {});
        cfg.predecessors.assign(1, {});
        return cfg;
    }

    // Block boundaries: statement 0, every label, every statement after a
    // terminator.
    std::vector<std::size_t> starts = {0};
    for (const auto& l : fn.labels)
        if (l.before_statement < stmts.size())
            starts.push_back(l.before_statement);
    for (std::size_t s = 0; s + 1 < stmts.size(); ++s)
        if (stmts[s].is_terminator)
            starts.push_back(s + 1);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    std::map<std::string, int> label_block;
    for (std::size_t b = 0; b < starts.size(); ++b) {
        Cfg::Block blk;
        blk.first = starts[b];
        blk.last = b + 1 < starts.size() ? starts[b + 1] : stmts.size();
        for (const auto& l : fn.labels)
            if (l.before_statement == blk.first) {
                blk.label = l.name;
                label_block[l.name] = static_cast<int>(b);
            }
        cfg.blocks.push_back(blk);
    }

    cfg.successors.assign(cfg.blocks.size() + 1, {});
    cfg.predecessors.assign(cfg.blocks.size() + 1, {});
    auto add_edge = [&](int from, int to) {
        cfg.successors[from].push_back(to);
        cfg.predecessors[to].push_back(from);
    };

    for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
        const auto& blk = cfg.blocks[b];
        const IrStatement& last = stmts[blk.last - 1];
        if (!last.is_terminator)
            throw ParseError("function @" + fn.name + ": block " + std::to_string(b) +
                             " does not end in a terminator");
        if (last.opcode == "ret" || last.opcode == "unreachable") {
            add_edge(static_cast<int>(b), cfg.virtual_exit());
            continue;
        }
        for (const auto& target : last.branch_targets) {
            auto it = label_block.find(target);
            if (it == label_block.end())
                throw ParseError("function @" + fn.name + ": branch to unknown label %" + target);
            add_edge(static_cast<int>(b), it->second);
        }
    }
    return cfg;
}

namespace {

// Blocks that are reachable from entry and can reach the virtual exit.
std::vector<bool> live_blocks(const Cfg& cfg) {
    std::size_t n = cfg.blocks.size() + 1;
    std::vector<bool> fwd(n, false), bwd(n, false);
    std::deque<int> q{cfg.entry};
    fwd[cfg.entry] = true;
    while (!q.empty()) {
        int b = q.front();
        q.pop_front();
        for (int s : cfg.successors[b])
            if (!fwd[s]) {
                fwd[s] = true;
                q.push_back(s);
            }
    }
    q = {cfg.virtual_exit()};
    bwd[cfg.virtual_exit()] = true;
    while (!q.empty()) {
        int b = q.front();
        q.pop_front();
        for (int p : cfg.predecessors[b])
            if (!bwd[p]) {
                bwd[p] = true;
                q.push_back(p);
            }
    }
    std::vector<bool> live(n);
    for (std::size_t i = 0; i < n; ++i)
        live[i] = fwd[i] && bwd[i];
    return live;
}

} // namespace

std::vector<int> post_dominators(const Cfg& cfg) {
    int n = static_cast<int>(cfg.blocks.size()) + 1;
    int exit = cfg.virtual_exit();
    std::vector<bool> live = live_blocks(cfg);
    std::vector<int> ipdom(n, -1);
    if (cfg.blocks.empty()) {
        ipdom[exit] = exit;
        return ipdom;
    }

    // Reverse postorder of the reversed CFG, rooted at the exit.
    std::vector<int> order;
    std::vector<bool> seen(n, false);
    std::vector<int> stack = {exit};
    std::vector<std::size_t> next(n, 0);
    seen[exit] = true;
    while (!stack.empty()) {
        int b = stack.back();
        if (next[b] < cfg.predecessors[b].size()) {
            int p = cfg.predecessors[b][next[b]++];
            if (!seen[p] && live[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
        } else {
            order.push_back(b);
            stack.pop_back();
        }
    }
    std::reverse(order.begin(), order.end()); // exit first

    std::vector<int> rpo_index(n, -1);
    for (std::size_t i = 0; i < order.size(); ++i)
        rpo_index[order[i]] = static_cast<int>(i);

    ipdom[exit] = exit;
    auto intersect = [&](int a, int b) {
        while (a != b) {
            while (rpo_index[a] > rpo_index[b])
                a = ipdom[a];
            while (rpo_index[b] > rpo_index[a])
                b = ipdom[b];
        }
        return a;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int b : order) {
            if (b == exit)
                continue;
            int new_ipdom = -1;
            for (int s : cfg.successors[b]) {
                if (!live[s] || ipdom[s] == -1)
                    continue;
                new_ipdom = new_ipdom == -1 ? s : intersect(new_ipdom, s);
            }
            if (new_ipdom != -1 && ipdom[b] != new_ipdom) {
                ipdom[b] = new_ipdom;
                changed = true;
            }
        }
    }
    return ipdom;
}

std::vector<std::pair<int, int>> control_dependences(const Cfg& cfg) {
    std::vector<int> ipdom = post_dominators(cfg);
    std::vector<bool> live = live_blocks(cfg);
    std::vector<std::pair<int, int>> out;
    for (std::size_t a = 0; a < cfg.blocks.size(); ++a) {
        if (!live[a])
            continue;
        for (int b : cfg.successors[a]) {
            if (!live[b])
                continue;
            // Walk from the successor up the post-dominator tree to (but not
            // including) ipdom(a); every node passed is control-dependent on a.
            int runner = b;
            while (runner != ipdom[a] && runner != cfg.virtual_exit()) {
                out.emplace_back(static_cast<int>(a), runner);
                if (runner == ipdom[runner])
                    break;
                runner = ipdom[runner];
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace vulnloc
