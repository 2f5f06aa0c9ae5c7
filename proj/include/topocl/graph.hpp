#pragma once

#include <numeric>
#include <vector>

#include "topocl/errors.hpp"

namespace topocl {

struct Edge {
    int a = 0;
    int b = 0;
    double weight = 0.0;
    int id = 0;  // stable index, equals the position in the edge list
};

// Union-find over a fixed node set, path halving + union by size.
class DisjointSet {
public:
    explicit DisjointSet(int n) : parent_(n), size_(n, 1), components_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Returns true if x and y were in different components.
    bool unite(int x, int y) {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        if (size_[x] < size_[y]) std::swap(x, y);
        parent_[y] = x;
        size_[x] += size_[y];
        --components_;
        return true;
    }

    int components() const { return components_; }

private:
    std::vector<int> parent_;
    std::vector<int> size_;
    int components_;
};

// Undirected weighted graph with stable edge ids: the 1-skeleton view of a
// network. Simple (no self-loops, no duplicate pairs) and connected;
// construction validates both.
class WeightedGraph {
public:
    // Edge ids are assigned positionally, overwriting whatever the caller
    // put in Edge::id.
    WeightedGraph(int node_count, std::vector<Edge> edges);

    // Skips validation; intended for tests that need to feed malformed
    // graphs into the decomposition error paths.
    static WeightedGraph unchecked(int node_count, std::vector<Edge> edges);

    int node_count() const { return node_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }

private:
    WeightedGraph() = default;

    int node_count_ = 0;
    std::vector<Edge> edges_;
};

}  // namespace topocl
