#pragma once

#include <string>
#include <vector>

#include "vulnloc/corpus.hpp"
#include "vulnloc/embedding.hpp"
#include "vulnloc/ir_tokens.hpp"
#include "vulnloc/linalg.hpp"

namespace vulnloc {

// Fixed-length encoded candidate: token rows (to be embedded), the training
// mask, and per-statement token spans with provenance for line mapping.
struct EncodedSample {
    enum class Prov { Source, Global, NoDebug };
    struct Span {
        std::size_t begin = 0; // token range [begin, end) inside the window
        std::size_t end = 0;
        int statement = 0; // 1-based candidate statement index
        Prov prov = Prov::NoDebug;
        std::string file;
        int line = 0;
    };

    std::string id;
    std::vector<int> token_ids; // max_tokens entries; -1 pads / out-of-vocab
    std::vector<double> mask;   // max_tokens entries, the diagonal alphas
    std::size_t real_tokens = 0;
    int anchor_token = 0;
    std::vector<Span> spans;
    std::vector<int> label; // original statement indices, empty = "0"
    bool excluded = false;
    bool mask_empty = false; // labeled lines fell outside the window

    bool vulnerable() const { return !label.empty(); }
    bool trainable() const { return !excluded && !mask_empty; }
};

struct EncodedDataset {
    int dim = 0;
    int max_tokens = 0;
    std::vector<EncodedSample> samples;
};

// Window selection and span clipping; the mask is filled by mask rules:
// non-vulnerable samples get ones over their real tokens, vulnerable ones get
// ones exactly on the labeled statements' tokens.
EncodedSample encode_candidate(const SemanticCandidate& candidate, bool excluded,
                               const TokenSequence& seq, const EmbeddingTable& table,
                               int max_tokens);

// max_tokens x dim matrix of embedded rows; padded rows are zero.
Matrix embed_sample(const EncodedSample& sample, const EmbeddingTable& table);

std::string write_dataset(const EncodedDataset& dataset);
EncodedDataset read_dataset(const std::string& text);

} // namespace vulnloc
