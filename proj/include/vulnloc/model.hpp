#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vulnloc/linalg.hpp"
#include "vulnloc/rng.hpp"

namespace vulnloc {

enum class CellKind { Gru, Lstm };

// One recurrent cell of one direction: gate weight stacks indexed z/r/h for
// GRU and i/f/o/g for LSTM.
struct CellParams {
    std::vector<Matrix> w; // per gate: hidden x input
    std::vector<Matrix> u; // per gate: hidden x hidden
    std::vector<Vector> b; // per gate: hidden
};

struct ModelHyper {
    CellKind cell = CellKind::Gru;
    int input_dim = 16;
    int hidden = 32;
    int dense_dim = 64;
    int layers = 2;
    int kappa = 1;
    double dropout = 0.4;
};

struct ModelParams {
    ModelHyper hyper;
    // layer-major, direction-minor: cells[layer * 2 + dir], dir 0 forward.
    std::vector<CellParams> cells;
    Matrix dense_w; // dense_dim x 2*hidden
    Vector dense_b;
    Vector act_w; // dense_dim
    double act_b = 0.0;

    static ModelParams init(const ModelHyper& hyper, std::uint64_t seed);
    ModelParams zeros_like() const;

    // Uniform traversal over every trainable scalar, in a fixed order.
    void for_each(const std::function<void(double&)>& fn);
    void for_each_pair(ModelParams& other,
                       const std::function<void(double&, double&)>& fn);
    std::size_t parameter_count() const;
};

// Caches from the forward pass, consumed by the backward pass.
struct ForwardTrace {
    Matrix input; // lambda x input_dim
    struct DirTrace {
        std::vector<Vector> x;      // input at each step
        std::vector<std::vector<Vector>> gates;
        std::vector<Vector> h;
        std::vector<Vector> c;      // LSTM only
        std::vector<Vector> c_tanh; // LSTM only
    };
    std::vector<DirTrace> dirs;        // layer*2+dir
    std::vector<Matrix> layer_inputs;  // per layer: lambda x in
    std::vector<Matrix> layer_outputs; // per layer: lambda x 2*hidden (after dropout)
    std::vector<Matrix> dropout_masks; // empty when dropout is off
    std::vector<Vector> dense_pre;     // per token: dense_dim
    Vector activations;                // lambda, in (0,1)
};

// Recurrent layers in both directions, dense reduction, and the per-token
// sigmoid, giving one activation per token. `dropout_rng` enables inverted
// dropout on recurrent layer outputs (training only).
ForwardTrace model_forward(const ModelParams& params, const Matrix& input,
                           Rng* dropout_rng = nullptr);

// Elementwise product with the location mask.
Vector multiply_layer(const Vector& activations, const Vector& mask);

// Mean of the kappa largest entries; ties resolve to the lowest index.
double kmax_average(const Vector& values, int kappa);
std::vector<int> kmax_indices(const Vector& values, int kappa);

// Binary cross-entropy on the pooled score with exact gradients through
// average pooling, the kappa-max selection, the mask, and both recurrent
// directions. Gradients accumulate into `grads`; returns the loss.
double loss_and_backward(const ModelParams& params, const ForwardTrace& trace,
                         const Vector& mask, double target, ModelParams& grads);

// Pooled score of one sample (no gradient bookkeeping).
double pooled_score(const ModelParams& params, const Matrix& input, const Vector& mask);

std::string write_model(const ModelParams& params);
ModelParams read_model(const std::string& text);

} // namespace vulnloc
