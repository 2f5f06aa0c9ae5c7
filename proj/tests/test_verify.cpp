#include "doctest.h"

#include <cmath>

#include "topocl/verify.hpp"
#include "topocl/wasserstein.hpp"

using namespace topocl;

TEST_CASE("chi-square critical values match tabulated quantiles") {
    // Tabulated upper 1% points of the chi-square distribution.
    CHECK(chi_square_critical(10, 0.01) == doctest::Approx(23.209).epsilon(0.005));
    CHECK(chi_square_critical(99, 0.01) == doctest::Approx(134.642).epsilon(0.005));
    CHECK(chi_square_critical(999, 0.01) == doctest::Approx(1105.5).epsilon(0.005));
    // Upper 5% point, different significance path.
    CHECK(chi_square_critical(10, 0.05) == doctest::Approx(18.307).epsilon(0.005));
    CHECK_THROWS_AS(chi_square_critical(0, 0.01), Error);
}

TEST_CASE("every self-check passes on a fresh seed") {
    const auto results = run_verification_suite(20240817ull);
    CHECK(results.size() == 11);
    for (const auto& r : results) {
        INFO(r.name, ": ", r.detail);
        CHECK(r.passed);
    }
}

TEST_CASE("a corrupted distance function is caught by the oracle comparison") {
    const DistanceFn corrupted = [](std::span<const double> a, std::span<const double> b) {
        return wasserstein_cycle_distance(a, b) * 1.001 + 1e-6;
    };
    const CheckResult r = check_distance_oracle(20240817ull, 50, corrupted);
    CHECK_FALSE(r.passed);
    CHECK_FALSE(r.detail.empty());
}

TEST_CASE("self-checks are deterministic for a fixed seed") {
    const CheckResult a = check_decomposition_oracle(7ull, 10);
    const CheckResult b = check_decomposition_oracle(7ull, 10);
    CHECK(a.passed == b.passed);
    CHECK(a.detail == b.detail);

    const CheckResult c = check_reservoir_uniformity(7ull, 500);
    const CheckResult d = check_reservoir_uniformity(7ull, 500);
    CHECK(c.detail == d.detail);
}
