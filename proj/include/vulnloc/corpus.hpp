#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vulnloc/slicer.hpp"

namespace vulnloc {

// Pre-patch numbers of deleted or moved lines, keyed by file. Throws
// FormatError on malformed hunk headers.
std::set<std::pair<std::string, int>> parse_diff(const std::string& diff_text);

// True when the diff adds lines but deletes none.
bool diff_is_addition_only(const std::string& diff_text);

struct GroundTruth {
    enum class Source { DiffDerived, DirectAnnotation };

    std::string program_id;
    std::set<std::pair<std::string, int>> vulnerable_lines; // (file, 1-based line)
    bool is_vulnerable = false;
    bool addition_only = false; // known-vulnerable but unlabelable
    Source source = Source::DirectAnnotation;
};

// Reads a truth directory: `truth.txt` lines of `<file>:<line>` mark direct
// annotations; `*.diff` / `*.patch` files contribute deleted-line labels.
GroundTruth load_ground_truth(const std::string& dir);

struct LabelOutcome {
    bool labeled = false;
    std::string warning; // set when a vulnerable line produced no statement
};

// Labels the candidate in place: indices of statements whose provenance hits
// a vulnerable line, when the program is marked vulnerable; otherwise "0"
// (empty label). Addition-only truth marks the candidate excluded.
LabelOutcome label_candidate(SemanticCandidate& candidate, const GroundTruth& truth);

struct CorpusRecordExtra {
    bool excluded_from_training = false;
};

struct Corpus {
    std::vector<SemanticCandidate> candidates;
    std::vector<bool> excluded; // aligned with candidates
    bool labeled = false;       // records carry label fields

    std::size_t size() const { return candidates.size(); }
};

std::string write_corpus(const Corpus& corpus);
Corpus read_corpus(const std::string& text);

} // namespace vulnloc
