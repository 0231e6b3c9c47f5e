#pragma once

#include <string>
#include <string_view>

#include "vulnloc/source_token.hpp"

namespace vulnloc {

bool is_c_keyword(std::string_view word);

// Lexes C source into tokens with 1-based line/column anchors. Comments and
// whitespace are discarded; everything else is covered by exactly one token.
// Throws LexError on unterminated strings, chars, or block comments.
TokenList tokenize_c(std::string_view source, const std::string& file);

// Rebuilds a text whose token positions coincide with the original file
// (comments become spaces). Extraction over the rebuilt text must match.
std::string reconstruct_source(const TokenList& tokens);

} // namespace vulnloc
