#include "vulnloc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vulnloc/errors.hpp"

namespace vulnloc {

std::vector<TrainSample> materialize_samples(const EncodedDataset& dataset,
                                             const EmbeddingTable& table) {
    std::vector<TrainSample> out;
    for (const auto& s : dataset.samples) {
        if (!s.trainable())
            continue;
        TrainSample ts;
        ts.id = s.id;
        ts.input = embed_sample(s, table);
        ts.mask = Vector::Zero(static_cast<int>(s.mask.size()));
        for (std::size_t i = 0; i < s.mask.size(); ++i)
            ts.mask(static_cast<int>(i)) = s.mask[i];
        ts.target = s.vulnerable() ? 1.0 : 0.0;
        ts.real_tokens = s.real_tokens;
        out.push_back(std::move(ts));
    }
    return out;
}

namespace {

// ADAMAX moments, shaped like the parameters.
struct Adamax {
    ModelParams m;
    ModelParams u;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;

    explicit Adamax(const ModelParams& params) : m(params.zeros_like()), u(params.zeros_like()) {}

    void update(ModelParams& params, ModelParams& grads, double lr) {
        ++step;
        double bias = 1.0 - std::pow(beta1, static_cast<double>(step));
        // Walk (param, grad), (m, grad), (u, grad) in the same fixed order.
        std::vector<double*> flat_m, flat_u;
        m.for_each([&](double& x) { flat_m.push_back(&x); });
        u.for_each([&](double& x) { flat_u.push_back(&x); });
        std::size_t idx = 0;
        params.for_each_pair(grads, [&](double& p, double& g) {
            double& mi = *flat_m[idx];
            double& ui = *flat_u[idx];
            mi = beta1 * mi + (1.0 - beta1) * g;
            ui = std::max(beta2 * ui, std::abs(g));
            p -= lr / bias * mi / (ui + epsilon);
            ++idx;
        });
    }
};

} // namespace

TrainResult train(const std::vector<TrainSample>& samples, const ModelHyper& hyper,
                  const TrainConfig& config) {
    if (samples.empty())
        throw DataError("training set is empty");
    if (config.batch_size < 1 || config.learning_rate <= 0)
        throw DataError("batch size must be >= 1 and learning rate > 0");

    TrainResult result;
    result.params = ModelParams::init(hyper, config.seed);

    bool has_pos = false, has_neg = false;
    for (const auto& s : samples)
        (s.target > 0.5 ? has_pos : has_neg) = true;
    result.single_class = !(has_pos && has_neg);

    Rng shuffle_rng = Rng(config.seed).derive("train-shuffle");
    Rng dropout_rng = Rng(config.seed).derive("train-dropout");
    Adamax optimizer(result.params);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            ModelParams grads = result.params.zeros_like();
            double batch_loss = 0;
            for (std::size_t k = start; k < end; ++k) {
                const TrainSample& s = samples[order[k]];
                auto trace = model_forward(result.params, s.input,
                                           hyper.dropout > 0 ? &dropout_rng : nullptr);
                batch_loss += loss_and_backward(result.params, trace, s.mask, s.target, grads);
            }
            double scale = 1.0 / static_cast<double>(end - start);
            grads.for_each([&](double& g) { g *= scale; });
            optimizer.update(result.params, grads, config.learning_rate);
            epoch_loss += batch_loss * scale;
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(1, batches)));
    }
    return result;
}

CrossValidationResult cross_validate(const std::vector<TrainSample>& samples,
                                     const std::vector<ModelHyper>& hypers,
                                     const TrainConfig& config) {
    if (hypers.empty())
        throw DataError("cross-validation needs at least one hyperparameter set");
    int k = std::max(2, config.folds);
    CrossValidationResult result;
    result.mean_f1.assign(hypers.size(), 0.0);

    Rng fold_rng = Rng(config.seed).derive("cv-folds");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    fold_rng.shuffle(order);

    for (std::size_t h = 0; h < hypers.size(); ++h) {
        double f1_sum = 0;
        int f1_count = 0;
        for (int fold = 0; fold < k; ++fold) {
            std::vector<TrainSample> train_set, held_out;
            for (std::size_t i = 0; i < order.size(); ++i)
                (static_cast<int>(i % static_cast<std::size_t>(k)) == fold ? held_out
                                                                           : train_set)
                    .push_back(samples[order[i]]);
            if (train_set.empty() || held_out.empty())
                continue;
            TrainConfig fold_config = config;
            fold_config.seed = config.seed + static_cast<std::uint64_t>(fold) + 1;
            auto trained = train(train_set, hypers[h], fold_config);

            long tp = 0, fp = 0, fn = 0;
            for (const auto& s : held_out) {
                Vector ones = Vector::Zero(s.input.rows());
                for (std::size_t i = 0; i < s.real_tokens; ++i)
                    ones(static_cast<int>(i)) = 1.0;
                double score = pooled_score(trained.params, s.input, ones);
                bool flagged = score > 0.5;
                if (flagged && s.target > 0.5)
                    ++tp;
                else if (flagged)
                    ++fp;
                else if (s.target > 0.5)
                    ++fn;
            }
            if (tp + fp == 0 || tp + fn == 0)
                continue;
            double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
            if (precision + recall > 0) {
                f1_sum += 2 * precision * recall / (precision + recall);
                ++f1_count;
            }
        }
        result.mean_f1[h] = f1_count ? f1_sum / f1_count : 0.0;
    }
    result.best_index = static_cast<std::size_t>(
        std::max_element(result.mean_f1.begin(), result.mean_f1.end()) -
        result.mean_f1.begin());
    return result;
}

} // namespace vulnloc
