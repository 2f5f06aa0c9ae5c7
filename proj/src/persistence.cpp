#include "topocl/persistence.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <string>

namespace topocl {

namespace {

bool value_less(const EdgeValue& x, const EdgeValue& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    return x.edge_id < y.edge_id;
}

// beta0 of the subgraph keeping edges with weight > eps.
int components_above(const WeightedGraph& g, double eps, int* edges_remaining) {
    DisjointSet ds(g.node_count());
    int kept = 0;
    for (const Edge& e : g.edges()) {
        if (e.weight > eps) {
            ds.unite(e.a, e.b);
            ++kept;
        }
    }
    if (edges_remaining) *edges_remaining = kept;
    return ds.components();
}

}  // namespace

std::vector<double> PersistenceDescriptor::death_weights() const {
    std::vector<double> w;
    w.reserve(deaths.size());
    for (const EdgeValue& d : deaths) w.push_back(d.weight);
    return w;
}

PersistenceDescriptor birth_death_decompose(const WeightedGraph& g) {
    // Kruskal on descending weight; equal weights processed in ascending
    // edge id order.
    std::vector<int> order(g.edges().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        const Edge& ex = g.edges()[x];
        const Edge& ey = g.edges()[y];
        if (ex.weight != ey.weight) return ex.weight > ey.weight;
        return ex.id < ey.id;
    });

    PersistenceDescriptor desc;
    DisjointSet ds(g.node_count());
    for (int idx : order) {
        const Edge& e = g.edges()[idx];
        if (ds.unite(e.a, e.b)) {
            desc.births.push_back({e.weight, e.id});
        } else {
            desc.deaths.push_back({e.weight, e.id});
        }
    }
    if (ds.components() != 1) {
        throw DisconnectedGraph("birth_death_decompose: graph has " +
                                std::to_string(ds.components()) + " components");
    }

    std::sort(desc.births.begin(), desc.births.end(), value_less);
    std::sort(desc.deaths.begin(), desc.deaths.end(), value_less);
    return desc;
}

BettiCurve betti_curve(const WeightedGraph& g) {
    std::vector<double> distinct;
    distinct.reserve(g.edges().size());
    for (const Edge& e : g.edges()) distinct.push_back(e.weight);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    BettiCurve curve;
    const double below = distinct.empty() ? -1.0 : distinct.front() - 1.0;
    curve.thresholds.push_back(below);
    for (double w : distinct) curve.thresholds.push_back(w);

    for (double eps : curve.thresholds) {
        int remaining = 0;
        const int b0 = components_above(g, eps, &remaining);
        curve.beta0.push_back(b0);
        curve.beta1.push_back(remaining - g.node_count() + b0);
    }
    return curve;
}

PersistenceDescriptor oracle_persistence(const WeightedGraph& g) {
    {
        DisjointSet ds(g.node_count());
        for (const Edge& e : g.edges()) ds.unite(e.a, e.b);
        if (ds.components() != 1) {
            throw DisconnectedGraph("oracle_persistence: graph has " +
                                    std::to_string(ds.components()) + " components");
        }
    }

    // Edge ids grouped by weight, consumed in ascending id order when
    // weights tie. The contract is multiset equality of weights; the id
    // assignment under ties is only a deterministic convention.
    std::map<double, std::vector<int>> ids_by_weight;
    for (const Edge& e : g.edges()) ids_by_weight[e.weight].push_back(e.id);
    for (auto& [w, ids] : ids_by_weight) std::sort(ids.begin(), ids.end());

    PersistenceDescriptor desc;
    int prev_beta0 = 1;  // full graph is connected
    for (auto& [w, ids] : ids_by_weight) {
        const int b0 = components_above(g, w, nullptr);
        const int births_here = b0 - prev_beta0;
        const int deaths_here = static_cast<int>(ids.size()) - births_here;
        for (int i = 0; i < births_here; ++i) desc.births.push_back({w, ids[i]});
        for (int i = 0; i < deaths_here; ++i) desc.deaths.push_back({w, ids[births_here + i]});
        prev_beta0 = b0;
    }

    std::sort(desc.births.begin(), desc.births.end(), value_less);
    std::sort(desc.deaths.begin(), desc.deaths.end(), value_less);
    return desc;
}

void dump_descriptor(const PersistenceDescriptor& desc, std::ostream& out) {
    for (const EdgeValue& v : desc.births) out << v.edge_id << ' ' << v.weight << " birth\n";
    for (const EdgeValue& v : desc.deaths) out << v.edge_id << ' ' << v.weight << " death\n";
}

void dump_betti_curve(const BettiCurve& curve, std::ostream& out) {
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        out << curve.thresholds[i] << ' ' << curve.beta0[i] << ' ' << curve.beta1[i] << '\n';
    }
}

}  // namespace topocl
