#pragma once

#include <span>
#include <utility>
#include <vector>

#include "topocl/graph.hpp"
#include "topocl/mlp.hpp"

namespace topocl {

// How network weights become filtration weights. raw uses the signed value
// directly; absolute filters on |w| and the scattered gradient picks up the
// sign chain factor.
enum class WeightTransform { raw, absolute };

// Which weight matrices are regularized, each as a bipartite graph over an
// adjacent layer pair. Bias parameters are never included.
struct SubgraphSpec {
    std::vector<std::pair<int, int>> layer_pairs;  // (l, l+1), one per weight matrix
    WeightTransform transform = WeightTransform::raw;

    // Every layer pair except the input one (all pairs when the network has
    // a single weight matrix): for a two-hidden-layer classifier this is
    // hidden1-hidden2 and hidden2-output.
    static SubgraphSpec output_side(const Mlp& net, WeightTransform t = WeightTransform::raw);

    // All layer pairs, the whole-network graph set.
    static SubgraphSpec whole_network(const Mlp& net, WeightTransform t = WeightTransform::raw);
};

void validate_spec(const Mlp& net, const SubgraphSpec& spec);

// One complete bipartite WeightedGraph per layer pair. Nodes 0..n_in-1 are
// the lower layer, n_in..n_in+n_out-1 the upper layer; edge ids walk the
// weight matrix in row-major order, so id = row * n_in + col.
std::vector<WeightedGraph> extract_subgraphs(const Mlp& net, const SubgraphSpec& spec);

// Extracts the k-th subgraph only.
WeightedGraph extract_subgraph(const Mlp& net, const SubgraphSpec& spec, int k);

// Adds scale * edge_gradient into the weight-gradient accumulator at each
// edge's (layer, row, col) coordinate. edge_grads is dense, indexed by edge
// id, and must cover the k-th subgraph's matrix exactly. Under the absolute
// transform each contribution is multiplied by the sign of the stored
// weight.
void scatter_topo_gradient(MlpGrads& grads, const Mlp& net, const SubgraphSpec& spec, int k,
                           std::span<const double> edge_grads, double scale);

}  // namespace topocl
