#include "topocl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "topocl/rng.hpp"

namespace topocl {

namespace {

void require_batch_width(const Matrix& batch, int expected) {
    if (batch.cols != expected) {
        throw ShapeMismatch("batch width " + std::to_string(batch.cols) + ", network expects " +
                            std::to_string(expected));
    }
}

// Forward pass keeping every layer's post-activation output; [0] is the
// input batch itself.
std::vector<Matrix> forward_all(const Mlp& net, const Matrix& batch) {
    std::vector<Matrix> acts;
    acts.reserve(net.weights.size() + 1);
    acts.push_back(batch);
    for (int l = 0; l < net.num_weight_layers(); ++l) {
        const Matrix& in = acts.back();
        const int n_out = net.layer_sizes[l + 1];
        const int n_in = net.layer_sizes[l];
        Matrix out(in.rows, n_out);
        const bool hidden = l + 1 < static_cast<int>(net.layer_sizes.size()) - 1;
        for (int r = 0; r < in.rows; ++r) {
            for (int j = 0; j < n_out; ++j) {
                double acc = net.biases[l][j];
                const std::size_t w_off = static_cast<std::size_t>(j) * n_in;
                for (int k = 0; k < n_in; ++k) {
                    acc += static_cast<double>(net.weights[l][w_off + k]) * in.at(r, k);
                }
                out.at(r, j) = hidden ? std::max(acc, 0.0) : acc;
            }
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

}  // namespace

Mlp Mlp::init(std::vector<int> layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw ShapeMismatch("network needs at least input and output layers");
    for (int s : layer_sizes) {
        if (s <= 0) throw ShapeMismatch("layer sizes must be positive");
    }
    Mlp net;
    net.layer_sizes = std::move(layer_sizes);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const int n_in = net.layer_sizes[l];
        const int n_out = net.layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / (n_in + n_out));
        std::vector<float> w(static_cast<std::size_t>(n_out) * n_in);
        for (float& x : w) x = static_cast<float>(rng.uniform(-bound, bound));
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(n_out, 0.0f);
    }
    return net;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (const auto& w : net.weights) g.weights.emplace_back(w.size(), 0.0);
    for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

void MlpGrads::clear() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

Matrix forward(const Mlp& net, const Matrix& batch) {
    require_batch_width(batch, net.layer_sizes.front());
    return forward_all(net, batch).back();
}

double backward_cross_entropy(const Mlp& net, const Matrix& batch, std::span<const int> labels,
                              MlpGrads& grads) {
    require_batch_width(batch, net.layer_sizes.front());
    if (static_cast<int>(labels.size()) != batch.rows) {
        throw ShapeMismatch("label count " + std::to_string(labels.size()) + " vs batch rows " +
                            std::to_string(batch.rows));
    }
    const int classes = net.layer_sizes.back();
    for (int y : labels) {
        if (y < 0 || y >= classes) throw InvalidLabel("label " + std::to_string(y));
    }
    if (grads.weights.size() != net.weights.size()) {
        throw ShapeMismatch("gradient accumulator does not match the network");
    }

    const auto acts = forward_all(net, batch);
    const Matrix& logits = acts.back();
    const int batch_n = batch.rows;

    // softmax + mean cross-entropy; delta holds dL/dlogits
    Matrix delta(batch_n, classes);
    double loss = 0.0;
    for (int r = 0; r < batch_n; ++r) {
        double maxv = logits.at(r, 0);
        for (int c = 1; c < classes; ++c) maxv = std::max(maxv, logits.at(r, c));
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(logits.at(r, c) - maxv);
        loss += -(logits.at(r, labels[r]) - maxv - std::log(denom));
        for (int c = 0; c < classes; ++c) {
            const double p = std::exp(logits.at(r, c) - maxv) / denom;
            delta.at(r, c) = (p - (c == labels[r] ? 1.0 : 0.0)) / batch_n;
        }
    }
    loss /= batch_n;

    for (int l = net.num_weight_layers() - 1; l >= 0; --l) {
        const Matrix& in = acts[l];
        const int n_out = net.layer_sizes[l + 1];
        const int n_in = net.layer_sizes[l];
        for (int r = 0; r < batch_n; ++r) {
            for (int j = 0; j < n_out; ++j) {
                const double d = delta.at(r, j);
                if (d == 0.0) continue;
                grads.biases[l][j] += d;
                const std::size_t w_off = static_cast<std::size_t>(j) * n_in;
                for (int k = 0; k < n_in; ++k) {
                    grads.weights[l][w_off + k] += d * in.at(r, k);
                }
            }
        }
        if (l > 0) {
            // propagate through the weights, then through the ReLU of the
            // previous hidden layer (its output is zero exactly where the
            // pre-activation was clipped)
            Matrix prev_delta(batch_n, n_in);
            for (int r = 0; r < batch_n; ++r) {
                for (int k = 0; k < n_in; ++k) {
                    if (in.at(r, k) <= 0.0) continue;  // ReLU gate
                    double acc = 0.0;
                    for (int j = 0; j < n_out; ++j) {
                        acc += delta.at(r, j) * static_cast<double>(net.weights[l][static_cast<std::size_t>(j) * n_in + k]);
                    }
                    prev_delta.at(r, k) = acc;
                }
            }
            delta = std::move(prev_delta);
        }
    }
    return loss;
}

void sgd_step(Mlp& net, const MlpGrads& grads, double learning_rate) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
            net.weights[l][i] = static_cast<float>(net.weights[l][i] - learning_rate * grads.weights[l][i]);
        }
        for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
            net.biases[l][i] = static_cast<float>(net.biases[l][i] - learning_rate * grads.biases[l][i]);
        }
    }
}

namespace {

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("unexpected end of file reading u32");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32_le(std::ostream& out, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    write_u32_le(out, bits);
}

float read_f32_le(std::istream& in) {
    const std::uint32_t bits = read_u32_le(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_checkpoint(const Mlp& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_u32_le(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
    for (int s : net.layer_sizes) write_u32_le(out, static_cast<std::uint32_t>(s));
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (float w : net.weights[l]) write_f32_le(out, w);
        for (float b : net.biases[l]) write_f32_le(out, b);
    }
    if (!out) throw IoError("write failed for " + path);
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const std::uint32_t layer_count = read_u32_le(in);
    if (layer_count < 2 || layer_count > 1024) {
        throw IoError("implausible layer count " + std::to_string(layer_count));
    }
    Mlp net;
    net.layer_sizes.resize(layer_count);
    for (auto& s : net.layer_sizes) s = static_cast<int>(read_u32_le(in));
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const std::size_t n = static_cast<std::size_t>(net.layer_sizes[l + 1]) * net.layer_sizes[l];
        std::vector<float> w(n);
        for (float& x : w) x = read_f32_le(in);
        std::vector<float> b(net.layer_sizes[l + 1]);
        for (float& x : b) x = read_f32_le(in);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

}  // namespace topocl
