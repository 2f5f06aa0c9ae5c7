#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace topocl {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // counts, worst errors, timing
};

// Pluggable distance so the negative control can verify the oracle catches
// a corrupted implementation.
using DistanceFn = std::function<double(std::span<const double>, std::span<const double>)>;

// Upper critical value of the chi-square distribution via the
// Wilson-Hilferty cube approximation.
double chi_square_critical(int degrees_of_freedom, double significance);

// Each check is deterministic in the seed and self-contained.
CheckResult check_decomposition_oracle(std::uint64_t seed, int num_graphs = 100);
CheckResult check_distance_oracle(std::uint64_t seed, int num_pairs = 200,
                                  const DistanceFn& distance = {});
CheckResult check_cycle_gradients(std::uint64_t seed, int num_graphs = 50);
CheckResult check_barycenter_optimality(std::uint64_t seed, int num_perturbations = 1000);
CheckResult check_online_barycenter(std::uint64_t seed, int num_tasks = 10);
CheckResult check_betti_monotonicity(std::uint64_t seed, int num_graphs = 30);
CheckResult check_mlp_gradients(std::uint64_t seed);
CheckResult check_composite_gradient(std::uint64_t seed);
CheckResult check_ring_buffer(std::uint64_t seed, int num_operations = 10000);
CheckResult check_reservoir_uniformity(std::uint64_t seed, int num_trials = 10000);
CheckResult check_sample_uniformity(std::uint64_t seed, int num_draws = 10000);

// The full battery in a fixed order.
std::vector<CheckResult> run_verification_suite(std::uint64_t seed);

}  // namespace topocl
