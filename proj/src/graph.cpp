#include "topocl/graph.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace topocl {

WeightedGraph::WeightedGraph(int node_count, std::vector<Edge> edges) {
    if (node_count < 1) throw InvalidGraph("node count must be positive");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        Edge& e = edges[i];
        if (e.a < 0 || e.a >= node_count || e.b < 0 || e.b >= node_count) {
            throw InvalidGraph("edge endpoint out of range at index " + std::to_string(i));
        }
        if (e.a == e.b) throw InvalidGraph("self-loop at edge index " + std::to_string(i));
        e.id = static_cast<int>(i);
    }

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(edges.size());
    for (const Edge& e : edges) {
        pairs.emplace_back(std::min(e.a, e.b), std::max(e.a, e.b));
    }
    std::sort(pairs.begin(), pairs.end());
    if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
        throw InvalidGraph("duplicate undirected edge pair");
    }

    DisjointSet ds(node_count);
    for (const Edge& e : edges) ds.unite(e.a, e.b);
    if (ds.components() != 1) {
        throw DisconnectedGraph("graph has " + std::to_string(ds.components()) + " components");
    }

    node_count_ = node_count;
    edges_ = std::move(edges);
}

WeightedGraph WeightedGraph::unchecked(int node_count, std::vector<Edge> edges) {
    WeightedGraph g;
    g.node_count_ = node_count;
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i].id = static_cast<int>(i);
    g.edges_ = std::move(edges);
    return g;
}

}  // namespace topocl
