#pragma once

#include <span>
#include <vector>

#include "topocl/persistence.hpp"

namespace topocl {

// Topological centroid of a set of same-architecture networks: the death
// set minimizing the weighted sum of squared Wasserstein distances, which
// in closed form is the element-wise weighted mean of the sorted death
// values. total_weight is the normalizing mass of the most recent combine
// (sum of the nu weights, or p+q after an online update).
struct CycleBarycenter {
    std::vector<double> death_values;  // sorted ascending
    double total_weight = 0.0;
};

// Squared 2-Wasserstein distance between two cycle death sets. The optimal
// matching pairs l-th smallest with l-th smallest, so this is the sum of
// squared differences of the sorted values. Inputs must be sorted ascending
// and of equal length.
double wasserstein_cycle_distance(std::span<const double> deaths_g, std::span<const double> deaths_h);

// Gradient of the squared distance with respect to each edge weight,
// returned dense, indexed by edge id: zero on birth edges, 2*(d_l -
// target_l) on the l-th smallest death edge.
std::vector<double> wasserstein_cycle_gradient(const PersistenceDescriptor& desc,
                                               const CycleBarycenter& target);

// Same gradient from an already-sorted death list; used by the training
// loop between decomposition refreshes, where death-edge membership is
// cached and only the weights are re-sorted.
std::vector<double> cycle_gradient_from_sorted(const std::vector<EdgeValue>& deaths_sorted,
                                               std::span<const double> target,
                                               int edge_count);

// Closed-form weighted barycenter of several sorted death sets.
CycleBarycenter cycle_barycenter(const std::vector<std::vector<double>>& death_sets,
                                 const std::vector<double>& nu);

// One-network running update: (p*prev + q*fresh) / (p+q) element-wise.
CycleBarycenter barycenter_online_update(const CycleBarycenter& prev,
                                         std::span<const double> new_deaths, double p, double q);

// The barycenter objective: weighted sum over death sets of the squared
// distance to the candidate. Used to verify the closed form by perturbation.
double barycenter_objective(std::span<const double> candidate_sorted,
                            const std::vector<std::vector<double>>& death_sets,
                            const std::vector<double>& nu);

// Exhaustive minimum over all bijections between the two death sets.
// Factorial cost, so capped at 7 elements.
double oracle_matching_distance(std::span<const double> deaths_g, std::span<const double> deaths_h);

}  // namespace topocl
