#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "topocl/errors.hpp"

namespace topocl {

// Dense row-major double matrix for activations and batches.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

// Fully-connected network: ReLU on hidden layers, identity on the output
// (logits). Parameters are stored in single precision; all arithmetic runs
// in double.
struct Mlp {
    std::vector<int> layer_sizes;               // input, hidden..., output
    std::vector<std::vector<float>> weights;    // [l]: sizes[l+1] x sizes[l], row-major
    std::vector<std::vector<float>> biases;     // [l]: sizes[l+1]

    // Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)); biases zero.
    static Mlp init(std::vector<int> layer_sizes, std::uint64_t seed);

    int num_weight_layers() const { return static_cast<int>(weights.size()); }

    float& weight_at(int layer, int row, int col) {
        return weights[layer][static_cast<std::size_t>(row) * layer_sizes[layer] + col];
    }
    float weight_at(int layer, int row, int col) const {
        return weights[layer][static_cast<std::size_t>(row) * layer_sizes[layer] + col];
    }
};

// Per-parameter gradient accumulator, same shapes as the Mlp, in double.
struct MlpGrads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpGrads zeros_like(const Mlp& net);
    void clear();
};

// Logits for a batch; batch is (examples x input_dim).
Matrix forward(const Mlp& net, const Matrix& batch);

// Mean softmax cross-entropy over the batch plus its exact gradient,
// accumulated into grads (which must be zeroed by the caller if a fresh
// gradient is wanted).
double backward_cross_entropy(const Mlp& net, const Matrix& batch, std::span<const int> labels,
                              MlpGrads& grads);

// Plain SGD: w <- w - lr * g. No momentum, no weight decay.
void sgd_step(Mlp& net, const MlpGrads& grads, double learning_rate);

// Flat binary checkpoint: u32 layer count, u32 layer sizes, then per weight
// layer the row-major float32 weight matrix followed by the bias vector,
// all little-endian.
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace topocl
