#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vulnloc/encoder.hpp"
#include "vulnloc/model.hpp"

namespace vulnloc {

struct TrainConfig {
    int batch_size = 16;
    double learning_rate = 0.002;
    int epochs = 10;
    std::uint64_t seed = 1;
    int folds = 1; // > 1 selects a hyperparameter set by cross-validated F1
};

struct TrainSample {
    std::string id;
    Matrix input; // lambda x dim
    Vector mask;
    double target = 0.0; // 1 when the candidate is labeled vulnerable
    std::size_t real_tokens = 0;
};

// Embeds the trainable samples (excluded and mask-empty ones are skipped).
std::vector<TrainSample> materialize_samples(const EncodedDataset& dataset,
                                             const EmbeddingTable& table);

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_losses;
    bool single_class = false;
};

// Minibatch ADAMAX with inverted dropout on recurrent outputs; deterministic
// under a fixed seed. epochs == 0 returns the initialized parameters.
TrainResult train(const std::vector<TrainSample>& samples, const ModelHyper& hyper,
                  const TrainConfig& config);

// k-fold selection: trains each candidate hyperparameter set on k-1 folds,
// scores F1 on the held-out fold at threshold 0.5, and returns the set with
// the best mean F1.
struct CrossValidationResult {
    std::size_t best_index = 0;
    std::vector<double> mean_f1; // per candidate set
};
CrossValidationResult cross_validate(const std::vector<TrainSample>& samples,
                                     const std::vector<ModelHyper>& hypers,
                                     const TrainConfig& config);

} // namespace vulnloc
