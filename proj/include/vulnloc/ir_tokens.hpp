#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vulnloc/candidates.hpp"
#include "vulnloc/slicer.hpp"

namespace vulnloc {

// Token stream of a rendered candidate with per-statement spans.
struct TokenSequence {
    std::vector<std::string> tokens;
    // One [begin, end) range per candidate statement, in statement order.
    std::vector<std::pair<std::size_t, std::size_t>> line_spans;
};

// Lexes the rendered statements: "%17" and literals stay single tokens, "@"
// splits from the following name, punctuation and commas are kept.
TokenSequence tokenize_ir(const SemanticCandidate& candidate);

// Replaces user-defined function names (an "@name(" occurrence whose name is
// not in the API list) with FUN1, FUN2, ... in first-appearance order.
// Library/API names and local ids are untouched.
TokenSequence symbolize(const TokenSequence& seq, const ApiNameList& api_names,
                        std::map<std::string, std::string>* name_map = nullptr);

} // namespace vulnloc
