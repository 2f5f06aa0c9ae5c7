#include "topocl/subgraph.hpp"

#include <cmath>
#include <string>

namespace topocl {

SubgraphSpec SubgraphSpec::output_side(const Mlp& net, WeightTransform t) {
    SubgraphSpec spec;
    spec.transform = t;
    const int layers = net.num_weight_layers();
    const int first = layers > 1 ? 1 : 0;
    for (int l = first; l < layers; ++l) spec.layer_pairs.emplace_back(l, l + 1);
    return spec;
}

SubgraphSpec SubgraphSpec::whole_network(const Mlp& net, WeightTransform t) {
    SubgraphSpec spec;
    spec.transform = t;
    for (int l = 0; l < net.num_weight_layers(); ++l) spec.layer_pairs.emplace_back(l, l + 1);
    return spec;
}

void validate_spec(const Mlp& net, const SubgraphSpec& spec) {
    if (spec.layer_pairs.empty()) throw InvalidSpec("no layer pairs");
    for (auto [a, b] : spec.layer_pairs) {
        if (a < 0 || a >= net.num_weight_layers()) {
            throw InvalidSpec("layer index " + std::to_string(a) + " out of range");
        }
        if (b != a + 1) {
            throw InvalidSpec("layer pair (" + std::to_string(a) + "," + std::to_string(b) +
                              ") is not adjacent; weights exist only between adjacent layers");
        }
    }
    for (std::size_t i = 0; i < spec.layer_pairs.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.layer_pairs.size(); ++j) {
            if (spec.layer_pairs[i] == spec.layer_pairs[j]) {
                throw InvalidSpec("duplicate layer pair");
            }
        }
    }
}

WeightedGraph extract_subgraph(const Mlp& net, const SubgraphSpec& spec, int k) {
    validate_spec(net, spec);
    if (k < 0 || k >= static_cast<int>(spec.layer_pairs.size())) {
        throw InvalidSpec("subgraph index " + std::to_string(k) + " out of range");
    }
    const int layer = spec.layer_pairs[k].first;
    const int n_in = net.layer_sizes[layer];
    const int n_out = net.layer_sizes[layer + 1];

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n_in) * n_out);
    for (int r = 0; r < n_out; ++r) {
        for (int c = 0; c < n_in; ++c) {
            double w = static_cast<double>(net.weight_at(layer, r, c));
            if (spec.transform == WeightTransform::absolute) w = std::abs(w);
            edges.push_back({c, n_in + r, w, 0});
        }
    }
    // complete bipartite with both sides non-empty, connected by construction
    return WeightedGraph(n_in + n_out, std::move(edges));
}

std::vector<WeightedGraph> extract_subgraphs(const Mlp& net, const SubgraphSpec& spec) {
    validate_spec(net, spec);
    std::vector<WeightedGraph> graphs;
    graphs.reserve(spec.layer_pairs.size());
    for (int k = 0; k < static_cast<int>(spec.layer_pairs.size()); ++k) {
        graphs.push_back(extract_subgraph(net, spec, k));
    }
    return graphs;
}

void scatter_topo_gradient(MlpGrads& grads, const Mlp& net, const SubgraphSpec& spec, int k,
                           std::span<const double> edge_grads, double scale) {
    validate_spec(net, spec);
    if (k < 0 || k >= static_cast<int>(spec.layer_pairs.size())) {
        throw InvalidSpec("subgraph index " + std::to_string(k) + " out of range");
    }
    const int layer = spec.layer_pairs[k].first;
    const std::size_t expected =
        static_cast<std::size_t>(net.layer_sizes[layer]) * net.layer_sizes[layer + 1];
    if (edge_grads.size() != expected) {
        throw InvalidEdgeId("edge gradient length " + std::to_string(edge_grads.size()) +
                            ", subgraph has " + std::to_string(expected) + " edges");
    }
    if (scale == 0.0) return;
    for (std::size_t id = 0; id < edge_grads.size(); ++id) {
        if (edge_grads[id] == 0.0) continue;
        double g = scale * edge_grads[id];
        if (spec.transform == WeightTransform::absolute) {
            const float w = net.weights[layer][id];
            g *= (w > 0.0f) ? 1.0 : (w < 0.0f ? -1.0 : 0.0);
        }
        grads.weights[layer][id] += g;
    }
}

}  // namespace topocl
