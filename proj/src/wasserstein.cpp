#include "topocl/wasserstein.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <numeric>
#include <string>

#include "topocl/errors.hpp"

namespace topocl {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw CardinalityMismatch(std::string(what) + ": " + std::to_string(a) +
                                  " vs " + std::to_string(b));
    }
}

[[maybe_unused]] bool is_sorted_ascending(std::span<const double> v) {
    return std::is_sorted(v.begin(), v.end());
}

}  // namespace

double wasserstein_cycle_distance(std::span<const double> deaths_g,
                                  std::span<const double> deaths_h) {
    require_same_size(deaths_g.size(), deaths_h.size(), "death set cardinality");
    assert(is_sorted_ascending(deaths_g) && is_sorted_ascending(deaths_h));
    double sum = 0.0;
    for (std::size_t l = 0; l < deaths_g.size(); ++l) {
        const double diff = deaths_g[l] - deaths_h[l];
        sum += diff * diff;
    }
    return sum;
}

std::vector<double> cycle_gradient_from_sorted(const std::vector<EdgeValue>& deaths_sorted,
                                               std::span<const double> target, int edge_count) {
    require_same_size(deaths_sorted.size(), target.size(), "death set cardinality");
    std::vector<double> grad(static_cast<std::size_t>(edge_count), 0.0);
    for (std::size_t l = 0; l < deaths_sorted.size(); ++l) {
        grad[static_cast<std::size_t>(deaths_sorted[l].edge_id)] =
            2.0 * (deaths_sorted[l].weight - target[l]);
    }
    return grad;
}

std::vector<double> wasserstein_cycle_gradient(const PersistenceDescriptor& desc,
                                               const CycleBarycenter& target) {
    return cycle_gradient_from_sorted(desc.deaths, target.death_values, desc.edge_count());
}

CycleBarycenter cycle_barycenter(const std::vector<std::vector<double>>& death_sets,
                                 const std::vector<double>& nu) {
    require_same_size(death_sets.size(), nu.size(), "death sets vs weights");
    if (death_sets.empty()) throw CardinalityMismatch("no death sets given");
    const std::size_t len = death_sets.front().size();
    for (const auto& d : death_sets) require_same_size(d.size(), len, "death set cardinality");
    double total = 0.0;
    for (double w : nu) {
        if (w <= 0.0) throw NonPositiveWeight("barycenter weight " + std::to_string(w));
        total += w;
    }

    CycleBarycenter bary;
    bary.death_values.assign(len, 0.0);
    bary.total_weight = total;
    for (std::size_t i = 0; i < death_sets.size(); ++i) {
        assert(is_sorted_ascending(death_sets[i]));
        for (std::size_t l = 0; l < len; ++l) {
            bary.death_values[l] += nu[i] * death_sets[i][l];
        }
    }
    for (double& v : bary.death_values) v /= total;
    return bary;
}

CycleBarycenter barycenter_online_update(const CycleBarycenter& prev,
                                         std::span<const double> new_deaths, double p, double q) {
    require_same_size(prev.death_values.size(), new_deaths.size(), "death set cardinality");
    if (p <= 0.0) throw NonPositiveWeight("p = " + std::to_string(p));
    if (q <= 0.0) throw NonPositiveWeight("q = " + std::to_string(q));
    assert(is_sorted_ascending(new_deaths));

    CycleBarycenter next;
    next.death_values.resize(prev.death_values.size());
    next.total_weight = p + q;
    for (std::size_t l = 0; l < new_deaths.size(); ++l) {
        next.death_values[l] = (p * prev.death_values[l] + q * new_deaths[l]) / (p + q);
    }
    return next;
}

double barycenter_objective(std::span<const double> candidate_sorted,
                            const std::vector<std::vector<double>>& death_sets,
                            const std::vector<double>& nu) {
    require_same_size(death_sets.size(), nu.size(), "death sets vs weights");
    double obj = 0.0;
    for (std::size_t i = 0; i < death_sets.size(); ++i) {
        obj += nu[i] * wasserstein_cycle_distance(candidate_sorted, death_sets[i]);
    }
    return obj;
}

double oracle_matching_distance(std::span<const double> deaths_g,
                                std::span<const double> deaths_h) {
    require_same_size(deaths_g.size(), deaths_h.size(), "death set cardinality");
    if (deaths_g.size() > 7) {
        throw TooLarge("oracle_matching_distance limited to 7 elements, got " +
                       std::to_string(deaths_g.size()));
    }
    std::vector<std::size_t> perm(deaths_g.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = deaths_g.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t l = 0; l < deaths_g.size(); ++l) {
            const double diff = deaths_g[l] - deaths_h[perm[l]];
            cost += diff * diff;
        }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace topocl
