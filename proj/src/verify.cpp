#include "topocl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "topocl/graph.hpp"
#include "topocl/memory.hpp"
#include "topocl/mlp.hpp"
#include "topocl/persistence.hpp"
#include "topocl/rng.hpp"
#include "topocl/subgraph.hpp"
#include "topocl/wasserstein.hpp"

namespace topocl {

namespace {

// Acklam's rational approximation to the standard normal quantile,
// accurate to ~1e-9 over (0, 1).
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    if (p <= 0.0 || p >= 1.0) throw Error("normal quantile needs p in (0, 1)");
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Random connected graph with distinct weights: a random spanning tree plus
// extra edges, weights uniform in [-1, 1].
WeightedGraph random_graph(Rng& rng, int max_nodes, int min_extra = 0) {
    const int n = 2 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_nodes - 1)));
    std::set<std::pair<int, int>> used;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i < n; ++i) {
        const int parent = static_cast<int>(rng.index(static_cast<std::uint64_t>(i)));
        pairs.emplace_back(parent, i);
        used.insert({parent, i});
    }
    const long long max_extra = static_cast<long long>(n) * (n - 1) / 2 - (n - 1);
    const int want_extra =
        std::min<long long>(max_extra,
                            min_extra + static_cast<int>(rng.index(static_cast<std::uint64_t>(n) + 1)));
    int added = 0;
    while (added < want_extra) {
        int a = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
        int b = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (used.count({a, b})) continue;
        used.insert({a, b});
        pairs.emplace_back(a, b);
        ++added;
    }

    std::set<double> weights_seen;
    std::vector<Edge> edges;
    for (const auto& [a, b] : pairs) {
        double w = rng.uniform(-1.0, 1.0);
        while (!weights_seen.insert(w).second) w = rng.uniform(-1.0, 1.0);
        edges.push_back({a, b, w, 0});
    }
    return WeightedGraph(n, edges);
}

std::vector<double> sorted_death_weights(const WeightedGraph& g) {
    return birth_death_decompose(g).death_weights();
}

std::vector<int> sorted_death_ids(const WeightedGraph& g) {
    std::vector<int> ids;
    for (const EdgeValue& e : birth_death_decompose(g).deaths) ids.push_back(e.edge_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

WeightedGraph with_weight(const WeightedGraph& g, int edge_index, double weight) {
    std::vector<Edge> edges = g.edges();
    edges[static_cast<std::size_t>(edge_index)].weight = weight;
    return WeightedGraph(g.node_count(), edges);
}

double reference_ce_loss(const Mlp& net, const Matrix& batch, const std::vector<int>& labels) {
    const Matrix logits = forward(net, batch);
    double total = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        double mx = logits.at(r, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) sum += std::exp(logits.at(r, c) - mx);
        total += std::log(sum) + mx - logits.at(r, static_cast<std::size_t>(labels[static_cast<std::size_t>(r)]));
    }
    return total / logits.rows;
}

}  // namespace

double chi_square_critical(int degrees_of_freedom, double significance) {
    if (degrees_of_freedom < 1) throw Error("chi-square needs at least one degree of freedom");
    const double z = normal_quantile(1.0 - significance);
    const double k = degrees_of_freedom;
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

CheckResult check_decomposition_oracle(std::uint64_t seed, int num_graphs) {
    CheckResult result{"decomposition-vs-oracle", true, ""};
    Rng rng(derive_seed(seed, 0xC1));
    for (int g = 0; g < num_graphs; ++g) {
        const WeightedGraph graph = random_graph(rng, 50);
        const PersistenceDescriptor fast = birth_death_decompose(graph);
        const PersistenceDescriptor slow = oracle_persistence(graph);

        const int n = graph.node_count(), e = graph.edge_count();
        if (static_cast<int>(fast.births.size()) != n - 1 ||
            static_cast<int>(fast.deaths.size()) != e - n + 1) {
            result.passed = false;
            result.detail = "cardinality identity failed on graph " + std::to_string(g);
            return result;
        }
        auto weights_of = [](const std::vector<EdgeValue>& v) {
            std::vector<double> w;
            for (const EdgeValue& e2 : v) w.push_back(e2.weight);
            std::sort(w.begin(), w.end());
            return w;
        };
        if (weights_of(fast.births) != weights_of(slow.births) ||
            weights_of(fast.deaths) != weights_of(slow.deaths)) {
            result.passed = false;
            result.detail = "weight multisets differ from the sweep oracle on graph " +
                            std::to_string(g);
            return result;
        }
    }
    result.detail = std::to_string(num_graphs) + " random graphs, up to 50 nodes";
    return result;
}

CheckResult check_distance_oracle(std::uint64_t seed, int num_pairs, const DistanceFn& distance) {
    CheckResult result{"distance-vs-matching-oracle", true, ""};
    const DistanceFn fn = distance
                              ? distance
                              : DistanceFn([](std::span<const double> a, std::span<const double> b) {
                                    return wasserstein_cycle_distance(a, b);
                                });
    Rng rng(derive_seed(seed, 0xC2));
    double worst = 0.0;
    for (int i = 0; i < num_pairs; ++i) {
        const int n = 2 + static_cast<int>(rng.index(6));  // 2..7 values
        std::vector<double> a, b;
        for (int j = 0; j < n; ++j) {
            a.push_back(rng.uniform(-2.0, 2.0));
            b.push_back(rng.uniform(-2.0, 2.0));
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const double closed = fn(a, b);
        const double brute = oracle_matching_distance(a, b);
        worst = std::max(worst, std::abs(closed - brute));
        if (std::abs(closed - brute) > 1e-9) {
            result.passed = false;
            result.detail = "pair " + std::to_string(i) + ": closed form " + fmt(closed) +
                            " vs exhaustive " + fmt(brute);
            return result;
        }
    }
    result.detail = std::to_string(num_pairs) + " pairs, worst gap " + fmt(worst);
    return result;
}

CheckResult check_cycle_gradients(std::uint64_t seed, int num_graphs) {
    CheckResult result{"cycle-gradient-vs-finite-difference", true, ""};
    Rng rng(derive_seed(seed, 0xC3));
    const double h = 1e-4;
    int checked = 0, skipped = 0;
    double worst = 0.0;

    for (int g = 0; g < num_graphs; ++g) {
        const WeightedGraph graph = random_graph(rng, 12, /*min_extra=*/1);
        const PersistenceDescriptor desc = birth_death_decompose(graph);
        if (desc.deaths.empty()) continue;

        // target: same graph under fresh weights, so cardinalities agree
        WeightedGraph reweighted = graph;
        {
            std::vector<Edge> edges = graph.edges();
            for (Edge& e : edges) e.weight = rng.uniform(-1.0, 1.0);
            reweighted = WeightedGraph(graph.node_count(), edges);
        }
        CycleBarycenter target;
        target.death_values = sorted_death_weights(reweighted);
        target.total_weight = 1.0;

        const std::vector<double> analytic = wasserstein_cycle_gradient(desc, target);
        std::set<int> death_ids;
        for (const EdgeValue& e : desc.deaths) death_ids.insert(e.edge_id);
        for (const EdgeValue& e : desc.births) {
            if (analytic[static_cast<std::size_t>(e.edge_id)] != 0.0) {
                result.passed = false;
                result.detail = "nonzero gradient on a spanning-tree edge, graph " +
                                std::to_string(g);
                return result;
            }
        }

        const std::vector<int> base_ids = sorted_death_ids(graph);
        for (int e = 0; e < graph.edge_count(); ++e) {
            const double w = graph.edges()[static_cast<std::size_t>(e)].weight;
            const WeightedGraph gp = with_weight(graph, e, w + h);
            const WeightedGraph gm = with_weight(graph, e, w - h);
            if (sorted_death_ids(gp) != base_ids || sorted_death_ids(gm) != base_ids) {
                ++skipped;
                continue;
            }
            const double fd = (wasserstein_cycle_distance(sorted_death_weights(gp),
                                                          target.death_values) -
                               wasserstein_cycle_distance(sorted_death_weights(gm),
                                                          target.death_values)) /
                              (2.0 * h);
            const double an = analytic[static_cast<std::size_t>(e)];
            const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            worst = std::max(worst, rel);
            if (rel > 1e-4) {
                result.passed = false;
                result.detail = "edge " + std::to_string(e) + " of graph " + std::to_string(g) +
                                ": finite difference " + fmt(fd) + " vs analytic " + fmt(an);
                return result;
            }
            ++checked;
        }
    }
    if (checked < 100) {
        result.passed = false;
        result.detail = "only " + std::to_string(checked) + " stable edges checked";
        return result;
    }
    result.detail = std::to_string(checked) + " edges checked, " + std::to_string(skipped) +
                    " membership flips skipped, worst relative gap " + fmt(worst);
    return result;
}

CheckResult check_barycenter_optimality(std::uint64_t seed, int num_perturbations) {
    CheckResult result{"barycenter-optimality", true, ""};
    Rng rng(derive_seed(seed, 0xC4));

    const int num_sets = 5, len = 4;
    std::vector<std::vector<double>> sets(num_sets);
    std::vector<double> nu(num_sets);
    for (int s = 0; s < num_sets; ++s) {
        for (int i = 0; i < len; ++i) sets[static_cast<std::size_t>(s)].push_back(rng.uniform(-2.0, 2.0));
        std::sort(sets[static_cast<std::size_t>(s)].begin(), sets[static_cast<std::size_t>(s)].end());
        nu[static_cast<std::size_t>(s)] = rng.uniform(0.1, 2.0);
    }
    const CycleBarycenter center = cycle_barycenter(sets, nu);
    const double at_center = barycenter_objective(center.death_values, sets, nu);

    for (int trial = 0; trial < num_perturbations; ++trial) {
        std::vector<double> candidate = center.death_values;
        for (double& v : candidate) v += 1e-2 * rng.normal();
        std::sort(candidate.begin(), candidate.end());
        const double objective = barycenter_objective(candidate, sets, nu);
        if (objective + 1e-12 < at_center) {
            result.passed = false;
            result.detail = "perturbation " + std::to_string(trial) + " beat the closed form by " +
                            fmt(at_center - objective);
            return result;
        }
    }
    result.detail = std::to_string(num_perturbations) + " perturbations, objective at optimum " +
                    fmt(at_center);
    return result;
}

CheckResult check_online_barycenter(std::uint64_t seed, int num_tasks) {
    CheckResult result{"online-vs-batch-barycenter", true, ""};
    Rng rng(derive_seed(seed, 0xC5));

    for (const auto& [p, q] : {std::pair{9.0, 1.0}, std::pair{2.5, 1.5}}) {
        const int len = 5;
        std::vector<std::vector<double>> sets;
        for (int t = 0; t < num_tasks; ++t) {
            std::vector<double> s;
            for (int i = 0; i < len; ++i) s.push_back(rng.uniform(-2.0, 2.0));
            std::sort(s.begin(), s.end());
            sets.push_back(std::move(s));
        }

        CycleBarycenter online;
        online.death_values = sets[0];
        online.total_weight = 1.0;
        for (int t = 1; t < num_tasks; ++t) {
            online = barycenter_online_update(online, sets[static_cast<std::size_t>(t)], p, q);
        }

        const double rho = q / (p + q);
        std::vector<double> nu(static_cast<std::size_t>(num_tasks));
        nu[0] = std::pow(1.0 - rho, num_tasks - 1);
        for (int i = 2; i <= num_tasks; ++i) {
            nu[static_cast<std::size_t>(i - 1)] = rho * std::pow(1.0 - rho, num_tasks - i);
        }
        const CycleBarycenter batch = cycle_barycenter(sets, nu);

        for (int i = 0; i < len; ++i) {
            const double gap = std::abs(online.death_values[static_cast<std::size_t>(i)] -
                                        batch.death_values[static_cast<std::size_t>(i)]);
            if (gap > 1e-6) {
                result.passed = false;
                result.detail = "element " + std::to_string(i) + " differs by " + fmt(gap) +
                                " at (p, q) = (" + fmt(p) + ", " + fmt(q) + ")";
                return result;
            }
        }
    }
    result.detail = std::to_string(num_tasks) + "-step sequences at two (p, q) settings";
    return result;
}

CheckResult check_betti_monotonicity(std::uint64_t seed, int num_graphs) {
    CheckResult result{"betti-curve-monotonicity", true, ""};
    Rng rng(derive_seed(seed, 0xC6));
    for (int g = 0; g < num_graphs; ++g) {
        const WeightedGraph graph = random_graph(rng, 30);
        const BettiCurve curve = betti_curve(graph);
        for (std::size_t i = 1; i < curve.thresholds.size(); ++i) {
            if (curve.beta0[i] < curve.beta0[i - 1] || curve.beta1[i] > curve.beta1[i - 1]) {
                result.passed = false;
                result.detail = "monotonicity violated on graph " + std::to_string(g);
                return result;
            }
        }
        if (curve.beta0.back() != graph.node_count() || curve.beta1.back() != 0) {
            result.passed = false;
            result.detail = "terminal Betti numbers wrong on graph " + std::to_string(g);
            return result;
        }
    }
    result.detail = std::to_string(num_graphs) + " filtrations, terminal (|V|, 0) confirmed";
    return result;
}

CheckResult check_mlp_gradients(std::uint64_t seed) {
    CheckResult result{"backprop-vs-finite-difference", true, ""};
    Mlp net = Mlp::init({4, 2, 3}, derive_seed(seed, 0xC7));
    Rng rng(derive_seed(seed, 0xC8));
    Matrix batch(5, 4);
    for (double& v : batch.v) v = rng.uniform(0.2, 1.0);
    const std::vector<int> labels = {0, 2, 1, 1, 0};

    MlpGrads grads = MlpGrads::zeros_like(net);
    backward_cross_entropy(net, batch, labels, grads);

    double worst = 0.0;
    int checked = 0;
    auto check_param = [&](float& p, double analytic) {
        const double orig = p;
        const double h = 1e-4 * std::max(1.0, std::abs(orig));
        p = static_cast<float>(orig + h);
        const double wp = p;
        const double lp = reference_ce_loss(net, batch, labels);
        p = static_cast<float>(orig - h);
        const double wm = p;
        const double lm = reference_ce_loss(net, batch, labels);
        p = static_cast<float>(orig);
        const double fd = (lp - lm) / (wp - wm);
        const double rel = std::abs(fd - analytic) / std::max({1.0, std::abs(fd), std::abs(analytic)});
        worst = std::max(worst, rel);
        ++checked;
        return rel <= 1e-4;
    };

    for (int l = 0; l < net.num_weight_layers(); ++l) {
        for (std::size_t i = 0; i < net.weights[static_cast<std::size_t>(l)].size(); ++i) {
            if (!check_param(net.weights[static_cast<std::size_t>(l)][i],
                             grads.weights[static_cast<std::size_t>(l)][i])) {
                result.passed = false;
                result.detail = "weight layer " + std::to_string(l) + " index " + std::to_string(i);
                return result;
            }
        }
        for (std::size_t i = 0; i < net.biases[static_cast<std::size_t>(l)].size(); ++i) {
            if (!check_param(net.biases[static_cast<std::size_t>(l)][i],
                             grads.biases[static_cast<std::size_t>(l)][i])) {
                result.passed = false;
                result.detail = "bias layer " + std::to_string(l) + " index " + std::to_string(i);
                return result;
            }
        }
    }
    result.detail = std::to_string(checked) + " parameters of a 4-2-3 net, worst relative gap " +
                    fmt(worst);
    return result;
}

CheckResult check_composite_gradient(std::uint64_t seed) {
    CheckResult result{"combined-loss-gradient", true, ""};
    Mlp net = Mlp::init({3, 4, 3}, derive_seed(seed, 0xC9));
    const SubgraphSpec spec = SubgraphSpec::output_side(net);
    const double lambda = 0.8;

    const Mlp other = Mlp::init({3, 4, 3}, derive_seed(seed, 0xCA));
    std::vector<CycleBarycenter> targets;
    for (std::size_t k = 0; k < spec.layer_pairs.size(); ++k) {
        CycleBarycenter t;
        t.death_values =
            birth_death_decompose(extract_subgraph(other, spec, static_cast<int>(k)))
                .death_weights();
        t.total_weight = 1.0;
        targets.push_back(std::move(t));
    }

    Rng rng(derive_seed(seed, 0xCB));
    Matrix batch(5, 3);
    for (double& v : batch.v) v = rng.uniform(0.2, 1.0);
    const std::vector<int> labels = {0, 1, 2, 1, 0};

    auto death_ids_now = [&]() {
        std::vector<int> ids;
        for (const EdgeValue& e :
             birth_death_decompose(extract_subgraph(net, spec, 0)).deaths) {
            ids.push_back(e.edge_id);
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    auto objective = [&]() {
        double loss = reference_ce_loss(net, batch, labels);
        for (std::size_t k = 0; k < spec.layer_pairs.size(); ++k) {
            const auto deaths =
                birth_death_decompose(extract_subgraph(net, spec, static_cast<int>(k)))
                    .death_weights();
            loss += 0.5 * lambda * wasserstein_cycle_distance(deaths, targets[k].death_values);
        }
        return loss;
    };

    MlpGrads grads = MlpGrads::zeros_like(net);
    backward_cross_entropy(net, batch, labels, grads);
    for (std::size_t k = 0; k < spec.layer_pairs.size(); ++k) {
        const PersistenceDescriptor desc =
            birth_death_decompose(extract_subgraph(net, spec, static_cast<int>(k)));
        scatter_topo_gradient(grads, net, spec, static_cast<int>(k),
                              wasserstein_cycle_gradient(desc, targets[k]), lambda / 2.0);
    }

    const std::vector<int> base_ids = death_ids_now();
    int checked = 0;
    double worst = 0.0;
    for (int l = 0; l < net.num_weight_layers(); ++l) {
        for (std::size_t i = 0; i < net.weights[static_cast<std::size_t>(l)].size(); ++i) {
            float& p = net.weights[static_cast<std::size_t>(l)][i];
            const double orig = p;
            const double h = 1e-5 * std::max(1.0, std::abs(orig));
            p = static_cast<float>(orig + h);
            const double wp = p;
            const double lp = objective();
            const bool stable_plus = death_ids_now() == base_ids;
            p = static_cast<float>(orig - h);
            const double wm = p;
            const double lm = objective();
            const bool stable_minus = death_ids_now() == base_ids;
            p = static_cast<float>(orig);
            if (!stable_plus || !stable_minus) continue;
            const double fd = (lp - lm) / (wp - wm);
            const double an = grads.weights[static_cast<std::size_t>(l)][i];
            const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            worst = std::max(worst, rel);
            if (rel > 1e-4) {
                result.passed = false;
                result.detail = "layer " + std::to_string(l) + " index " + std::to_string(i) +
                                ": finite difference " + fmt(fd) + " vs analytic " + fmt(an);
                return result;
            }
            ++checked;
        }
    }
    if (checked < 15) {
        result.passed = false;
        result.detail = "only " + std::to_string(checked) + " stable weights checked";
        return result;
    }
    result.detail = std::to_string(checked) + " weights checked, worst relative gap " + fmt(worst);
    return result;
}

CheckResult check_ring_buffer(std::uint64_t seed, int num_operations) {
    CheckResult result{"ring-buffer-fifo-fuzz", true, ""};
    const int capacity = 50, classes = 10;
    const int quota = capacity / classes;
    EpisodicMemory mem(MemoryStrategy::ring, capacity, classes, derive_seed(seed, 0xCC));
    std::vector<std::vector<int>> oracle(classes);

    Rng rng(derive_seed(seed, 0xCD));
    for (int op = 1; op <= num_operations; ++op) {
        const int label = static_cast<int>(rng.index(classes));
        MemoryItem item;
        item.label = label;
        item.task_id = op;
        mem.update(item);
        auto& fifo = oracle[static_cast<std::size_t>(label)];
        fifo.push_back(op);
        if (static_cast<int>(fifo.size()) > quota) fifo.erase(fifo.begin());

        if (op % 100 == 0 || op == num_operations) {
            std::vector<int> expected;
            for (const auto& cls : oracle) expected.insert(expected.end(), cls.begin(), cls.end());
            std::vector<int> actual;
            for (const MemoryItem& m : mem.contents()) actual.push_back(m.task_id);
            if (actual != expected || mem.size() > static_cast<std::size_t>(capacity)) {
                result.passed = false;
                result.detail = "contents diverged from the reference fifo at operation " +
                                std::to_string(op);
                return result;
            }
        }
        if (op % 500 == 0) {
            const auto sample = mem.sample(7);
            std::set<int> ids;
            for (const MemoryItem& m : sample) ids.insert(m.task_id);
            std::set<int> stored;
            for (const MemoryItem& m : mem.contents()) stored.insert(m.task_id);
            if (ids.size() != sample.size() ||
                !std::includes(stored.begin(), stored.end(), ids.begin(), ids.end())) {
                result.passed = false;
                result.detail = "sample was not a distinct subset at operation " +
                                std::to_string(op);
                return result;
            }
        }
    }
    result.detail = std::to_string(num_operations) + " operations, capacity " +
                    std::to_string(capacity) + ", quota " + std::to_string(quota);
    return result;
}

CheckResult check_reservoir_uniformity(std::uint64_t seed, int num_trials) {
    CheckResult result{"reservoir-retention-uniformity", true, ""};
    const int capacity = 100, stream_len = 1000;
    std::vector<long long> retained(static_cast<std::size_t>(stream_len), 0);

    for (int trial = 0; trial < num_trials; ++trial) {
        EpisodicMemory mem(MemoryStrategy::reservoir, capacity, 1,
                           derive_seed(seed, 0xD000 + static_cast<std::uint64_t>(trial)));
        for (int t = 0; t < stream_len; ++t) {
            MemoryItem item;
            item.label = 0;
            item.task_id = t;
            mem.update(item);
        }
        for (const MemoryItem& m : mem.contents()) {
            ++retained[static_cast<std::size_t>(m.task_id)];
        }
    }

    const double expected =
        static_cast<double>(num_trials) * capacity / static_cast<double>(stream_len);
    double stat = 0.0;
    for (long long count : retained) {
        const double diff = static_cast<double>(count) - expected;
        stat += diff * diff / expected;
    }
    const double critical = chi_square_critical(stream_len - 1, 0.01);
    result.passed = stat < critical;
    result.detail = "chi-square " + fmt(stat) + " vs critical " + fmt(critical) + " (df " +
                    std::to_string(stream_len - 1) + ", significance 0.01)";
    return result;
}

CheckResult check_sample_uniformity(std::uint64_t seed, int num_draws) {
    CheckResult result{"memory-sampling-uniformity", true, ""};
    const int stored = 100;
    EpisodicMemory mem(MemoryStrategy::ring, stored, stored, derive_seed(seed, 0xCE));
    for (int i = 0; i < stored; ++i) {
        MemoryItem item;
        item.label = i;
        item.task_id = i;
        mem.update(item);
    }

    std::vector<long long> counts(static_cast<std::size_t>(stored), 0);
    for (int draw = 0; draw < num_draws; ++draw) {
        ++counts[static_cast<std::size_t>(mem.sample(1)[0].task_id)];
    }
    const double expected = static_cast<double>(num_draws) / stored;
    double stat = 0.0;
    for (long long count : counts) {
        const double diff = static_cast<double>(count) - expected;
        stat += diff * diff / expected;
    }
    const double critical = chi_square_critical(stored - 1, 0.01);
    result.passed = stat < critical;
    result.detail = "chi-square " + fmt(stat) + " vs critical " + fmt(critical) + " (df " +
                    std::to_string(stored - 1) + ", significance 0.01)";
    return result;
}

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
    return {
        check_decomposition_oracle(seed),
        check_distance_oracle(seed),
        check_cycle_gradients(seed),
        check_barycenter_optimality(seed),
        check_online_barycenter(seed),
        check_betti_monotonicity(seed),
        check_mlp_gradients(seed),
        check_composite_gradient(seed),
        check_ring_buffer(seed),
        check_reservoir_uniformity(seed),
        check_sample_uniformity(seed),
    };
}

}  // namespace topocl
