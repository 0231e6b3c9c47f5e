#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vulnloc/candidates.hpp"
#include "vulnloc/depgraph.hpp"
#include "vulnloc/ir.hpp"

namespace vulnloc {

struct SliceAnchor {
    std::string candidate_id;
    std::set<StatementRef> statements; // non-empty for locatable candidates
};

// One rendered statement of a semantic candidate (ids already renumbered).
struct CandidateStatement {
    std::string text;
    std::string source_file; // empty when no provenance
    int source_line = 0;
    bool is_global = false;

    bool has_provenance() const { return !source_file.empty(); }
};

// Ordered statement sequence produced by slice + inline + renumber, with
// per-statement provenance back to source lines.
struct SemanticCandidate {
    std::string id;
    CandidateKind kind = CandidateKind::FunctionCall;
    std::string file;
    int line = 0;
    int column = 0;
    std::vector<CandidateStatement> statements; // globals first, then code
    std::vector<std::string> functions_involved;
    int anchor_index = -1; // first anchor statement, index into `statements`

    std::vector<int> label; // labeling stage: 1-based statement indices, empty = "0"
};

// Anchor = statements on the candidate's line that mention its identifiers
// (the named call for FC, the definition for AD/PD, the assignment's stores
// for AE), all statements on the line when no identifier matches, or the
// statements referencing a matching global for file-scope declarations.
// Returns nullopt when the line produced no code.
std::optional<SliceAnchor> locate_anchor(const SyntaxCandidate& candidate,
                                         const LinkedModule& linked,
                                         const std::vector<IrModule>& modules);

// Bidirectional transitive closure over all edge kinds: the forward closure
// of the anchor, then the backward closure of that whole set. Ordered by
// (module, function, statement index).
std::vector<StatementRef> slice(const DependenceGraph& graph,
                                const std::set<StatementRef>& anchor);

// Splices callee slices after their call statements and renumbers appended
// local ids to the smallest unused value in the calling context; recursion is
// cut at the first repeated callee on the inlining path.
SemanticCandidate inline_and_renumber(const SyntaxCandidate& candidate,
                                      const std::vector<StatementRef>& sliced,
                                      const std::set<StatementRef>& anchor,
                                      const LinkedModule& linked,
                                      const std::vector<IrModule>& modules);

struct SemanticBatch {
    std::vector<SemanticCandidate> candidates;
    std::vector<std::string> skipped; // candidate ids with no anchor
};

SemanticBatch build_semantic_candidates(const std::vector<SyntaxCandidate>& candidates,
                           const std::vector<LinkedModule>& groups,
                           const std::vector<IrModule>& modules);

// Statement text with metadata attachments stripped, ready for rendering.
std::string strip_metadata(const std::string& raw);

// Re-validates a rendered candidate: a numeric id must not be defined twice,
// and a use with a definition in the candidate must come after it. Returns an
// error description or empty.
std::string validate_rendered(const SemanticCandidate& candidate);

} // namespace vulnloc
