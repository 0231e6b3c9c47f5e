#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vulnloc/linalg.hpp"

namespace vulnloc {

struct EmbeddingTable {
    std::map<std::string, int> vocab; // symbol -> row
    Matrix vectors;                   // vocab-size x dim
    int dim = 0;
    std::uint64_t seed = 0;

    int lookup(const std::string& token) const {
        auto it = vocab.find(token);
        return it == vocab.end() ? -1 : it->second;
    }
    // Out-of-vocabulary tokens map to the zero vector.
    Vector vector_of(const std::string& token) const {
        int row = lookup(token);
        return row < 0 ? Vector::Zero(dim) : Vector(vectors.row(row));
    }
};

struct EmbeddingConfig {
    int dim = 30;
    int window = 5;
    int negatives = 5;
    int epochs = 3;
    int min_count = 1;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
};

// Skip-gram with negative sampling over token documents. Deterministic for a
// fixed seed; throws DataError on an empty corpus.
EmbeddingTable train_embedding(const std::vector<std::vector<std::string>>& documents,
                               const EmbeddingConfig& config);

std::string write_embedding(const EmbeddingTable& table);
EmbeddingTable read_embedding(const std::string& text);

} // namespace vulnloc
