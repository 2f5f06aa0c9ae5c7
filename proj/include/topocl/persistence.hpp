#pragma once

#include <iosfwd>
#include <vector>

#include "topocl/graph.hpp"

namespace topocl {

// One filtration value with a back-reference to the edge it came from.
struct EdgeValue {
    double weight = 0.0;
    int edge_id = 0;
};

// Birth/death decomposition of a connected graph. Every edge weight is
// either a birth value (a connected component appears there as the
// filtration removes edges) or a death value (a cycle disappears). Births
// are exactly the maximum-spanning-tree edges, deaths the rest, so
// |births| = |V|-1 and |deaths| = |W|-|V|+1.
struct PersistenceDescriptor {
    std::vector<EdgeValue> births;  // sorted ascending by (weight, edge_id)
    std::vector<EdgeValue> deaths;  // sorted ascending by (weight, edge_id)

    int edge_count() const { return static_cast<int>(births.size() + deaths.size()); }

    std::vector<double> death_weights() const;
};

// Component and cycle counts along the filtration. thresholds[0] sits below
// the smallest weight (full graph); each later entry is one distinct edge
// weight, evaluated after removing all edges of weight <= threshold.
struct BettiCurve {
    std::vector<double> thresholds;
    std::vector<int> beta0;
    std::vector<int> beta1;
};

// Maximum-spanning-tree decomposition via Kruskal. Ties in weight are
// broken by ascending edge id.
PersistenceDescriptor birth_death_decompose(const WeightedGraph& g);

BettiCurve betti_curve(const WeightedGraph& g);

// Independent brute-force check: sweeps every distinct threshold and counts
// components with a fresh union-find, deriving births/deaths from the jumps
// in beta0/beta1. Must agree with birth_death_decompose as weight multisets.
PersistenceDescriptor oracle_persistence(const WeightedGraph& g);

// Line-delimited debug dumps for plotting: "edge_id weight birth|death" and
// "threshold beta0 beta1".
void dump_descriptor(const PersistenceDescriptor& desc, std::ostream& out);
void dump_betti_curve(const BettiCurve& curve, std::ostream& out);

}  // namespace topocl
