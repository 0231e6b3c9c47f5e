#pragma once

#include <string>
#include <vector>

#include "vulnloc/ir.hpp"

namespace vulnloc {

// Per-function control-flow graph over statement index ranges. Block ids are
// indices into `blocks`; `virtual_exit` is one past the last real block and
// collects all returns.
struct Cfg {
    struct Block {
        std::size_t first = 0; // [first, last) statement indices
        std::size_t last = 0;
        std::string label;     // empty for the entry block
    };

    std::vector<Block> blocks;
    std::vector<std::vector<int>> successors; // sized blocks.size() + 1
    std::vector<std::vector<int>> predecessors;
    int entry = 0;

    int virtual_exit() const { return static_cast<int>(blocks.size()); }
    int block_of(std::size_t statement_index) const;
};

// Splits at labels and terminators; edges follow br/ret semantics. Throws
// ParseError when a block does not end in a terminator.
Cfg build_cfg(const IrFunction& fn);

// Immediate post-dominators, indexed by block id (virtual exit included,
// mapping to itself). Blocks that cannot reach the exit are pruned first and
// get -1.
std::vector<int> post_dominators(const Cfg& cfg);

// Control-dependence pairs (branch block -> dependent block) per the
// post-dominance frontier criterion.
std::vector<std::pair<int, int>> control_dependences(const Cfg& cfg);

} // namespace vulnloc
