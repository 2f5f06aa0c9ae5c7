#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "topocl/persistence.hpp"
#include "topocl/rng.hpp"
#include "topocl/trainer.hpp"

using namespace topocl;

namespace {

TaskStream tiny_stream(int num_tasks, int per_task, int feature_dim, int num_classes,
                       std::uint64_t seed) {
    SyntheticParams params;
    params.num_tasks = num_tasks;
    params.train_per_task = per_task;
    params.test_per_task = std::max(20, per_task / 3);
    params.feature_dim = feature_dim;
    params.num_classes = num_classes;
    params.spread = 2.0;
    params.noise = 0.3;
    params.seed = seed;
    return make_synthetic_tasks(params);
}

bool same_weights(const Mlp& a, const Mlp& b) {
    return a.layer_sizes == b.layer_sizes && a.weights == b.weights && a.biases == b.biases;
}

std::string file_contents(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("method names parse and print consistently") {
    for (const std::string name :
         {"finetune", "er-ring", "er-res", "top-ring", "top-res", "multitask"}) {
        Method method;
        MemoryStrategy strategy;
        parse_method(name, method, strategy);
        CHECK(method_name(method, strategy) == name);
    }
    Method method;
    MemoryStrategy strategy;
    CHECK_THROWS_AS(parse_method("topological", method, strategy), InvalidSpec);
}

TEST_CASE("configs are validated") {
    TrainerConfig config;
    CHECK_NOTHROW(validate_config(config));
    TrainerConfig bad = config;
    bad.lambda = -0.1;
    CHECK_THROWS_AS(validate_config(bad), InvalidSpec);
    bad = config;
    bad.m = 0;
    CHECK_THROWS_AS(validate_config(bad), InvalidSpec);
    bad = config;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(validate_config(bad), InvalidSpec);
    bad = config;
    bad.p = 0.0;
    CHECK_THROWS_AS(validate_config(bad), InvalidSpec);
    bad = config;
    bad.mem_per_class = -1;
    CHECK_THROWS_AS(validate_config(bad), InvalidSpec);
    bad = config;
    bad.hidden_sizes = {};
    CHECK_THROWS_AS(validate_config(bad), InvalidSpec);
}

TEST_CASE("first task initializes barycenters to the current death sets") {
    const TaskStream stream = tiny_stream(2, 40, 4, 3, 5);
    TrainerConfig config;
    config.hidden_sizes = {2};  // layers 4-2-3, regularized pair is the 3x2 matrix
    config.batch_size = 10;
    config.seed = 3;

    Trainer trainer(stream, config, Method::top);
    trainer.train_first_task();
    REQUIRE(trainer.barycenters().size() == 1);
    // complete bipartite 2+3: 6 edges minus a 4-edge spanning tree
    CHECK(trainer.barycenters()[0].death_values.size() == 2);

    // the initial barycenter is exactly the decomposition of the trained net
    const SubgraphSpec spec = SubgraphSpec::output_side(trainer.net());
    const auto deaths = birth_death_decompose(extract_subgraph(trainer.net(), spec, 0)).death_weights();
    CHECK(trainer.barycenters()[0].death_values == deaths);

    TrainerConfig deeper = config;
    deeper.hidden_sizes = {2, 2};  // pairs 2x2 and 2x3
    Trainer trainer2(stream, deeper, Method::top);
    trainer2.train_first_task();
    REQUIRE(trainer2.barycenters().size() == 2);
    CHECK(trainer2.barycenters()[0].death_values.size() == 1);  // 4 edges - 3 tree edges
    CHECK(trainer2.barycenters()[1].death_values.size() == 2);
}

TEST_CASE("zero penalty weight reproduces replay training bit for bit") {
    const TaskStream stream = tiny_stream(3, 60, 6, 3, 11);
    TrainerConfig config;
    config.hidden_sizes = {8};
    config.seed = 17;
    config.lambda = 0.0;

    Trainer top(stream, config, Method::top);
    const ExperimentReport top_report = top.run();
    Trainer er(stream, config, Method::er);
    const ExperimentReport er_report = er.run();

    CHECK(same_weights(top.net(), er.net()));
    CHECK(top_report.decomposition_count == 0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) CHECK(top_report.r.at(i, j) == er_report.r.at(i, j));
    }
}

TEST_CASE("replay with an empty buffer reproduces plain finetuning bit for bit") {
    const TaskStream stream = tiny_stream(3, 60, 6, 3, 12);
    TrainerConfig config;
    config.hidden_sizes = {8};
    config.seed = 29;
    config.mem_per_class = 0;

    Trainer er(stream, config, Method::er);
    er.run();
    Trainer finetune(stream, config, Method::finetune);
    finetune.run();
    CHECK(same_weights(er.net(), finetune.net()));
}

TEST_CASE("a positive penalty weight changes the trajectory") {
    const TaskStream stream = tiny_stream(3, 60, 6, 3, 13);
    TrainerConfig config;
    config.hidden_sizes = {8};
    config.seed = 31;
    config.lambda = 5.0;

    Trainer top(stream, config, Method::top);
    top.run();
    TrainerConfig er_config = config;
    er_config.lambda = 0.0;
    Trainer er(stream, er_config, Method::er);
    er.run();
    CHECK(!same_weights(top.net(), er.net()));
}

// Replays the documented update rule with library primitives and checks the
// trainer produces identical weights: membership refresh at the scheduled
// iteration, rank re-sort of cached death edges, lambda * (w - match), one
// SGD step, in that order.
TEST_CASE("a later-task step composes exactly as documented") {
    const TaskStream stream = tiny_stream(2, 24, 5, 3, 21);
    TrainerConfig config;
    config.hidden_sizes = {4};
    config.batch_size = 12;  // task 2 runs exactly two iterations
    config.seed = 41;
    config.lambda = 0.7;
    config.m = 1;
    config.gamma = 0.05;
    config.mem_per_class = 0;  // empty buffer isolates the penalty path

    Trainer trainer(stream, config, Method::top);
    trainer.train_first_task();

    Mlp manual = trainer.net();
    const SubgraphSpec spec = SubgraphSpec::output_side(manual);
    const std::vector<double> barycenter = trainer.barycenters()[0].death_values;
    const int layer = spec.layer_pairs[0].first;
    const int edge_count = manual.layer_sizes[static_cast<std::size_t>(layer)] *
                           manual.layer_sizes[static_cast<std::size_t>(layer) + 1];

    const Dataset& train = stream.tasks[1].train;
    std::vector<int> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, seed_stream::kTaskShuffleBase + 1));
    shuffle_rng.shuffle(order);

    MlpGrads grads = MlpGrads::zeros_like(manual);
    for (int start = 0; start < train.size(); start += config.batch_size) {
        const int n = std::min(config.batch_size, train.size() - start);
        Matrix batch(n, 5);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int src = order[static_cast<std::size_t>(start + i)];
            for (int j = 0; j < 5; ++j) {
                batch.at(i, j) = train.x[static_cast<std::size_t>(src)][static_cast<std::size_t>(j)];
            }
            labels[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(src)];
        }

        const PersistenceDescriptor desc =
            birth_death_decompose(extract_subgraph(manual, spec, 0));
        grads.clear();
        backward_cross_entropy(manual, batch, labels, grads);

        std::vector<EdgeValue> deaths = desc.deaths;  // already sorted by (weight, id)
        const std::vector<double> edge_grads =
            cycle_gradient_from_sorted(deaths, barycenter, edge_count);
        scatter_topo_gradient(grads, manual, spec, 0, edge_grads, config.lambda / 2.0);
        sgd_step(manual, grads, config.gamma);
    }

    trainer.train_later_task(1);
    CHECK(same_weights(trainer.net(), manual));
}

// Composite objective: cross-entropy plus (lambda/2) times the summed
// squared distances to fixed targets. The assembled analytic gradient must
// match central differences on every parameter.
TEST_CASE("the combined loss gradient matches finite differences") {
    Mlp net = Mlp::init({3, 4, 3}, 61);
    const SubgraphSpec spec = SubgraphSpec::output_side(net);
    const double lambda = 0.8;

    const Mlp other = Mlp::init({3, 4, 3}, 62);
    std::vector<CycleBarycenter> targets;
    for (std::size_t k = 0; k < spec.layer_pairs.size(); ++k) {
        CycleBarycenter t;
        t.death_values =
            birth_death_decompose(extract_subgraph(other, spec, static_cast<int>(k)))
                .death_weights();
        t.total_weight = 1.0;
        targets.push_back(std::move(t));
    }

    Rng rng(71);
    Matrix batch(5, 3);
    for (double& v : batch.v) v = rng.uniform(0.2, 1.0);
    const std::vector<int> labels = {0, 1, 2, 1, 0};

    auto death_ids_of = [&](int k) {
        std::vector<int> ids;
        for (const EdgeValue& e :
             birth_death_decompose(extract_subgraph(net, spec, k)).deaths) {
            ids.push_back(e.edge_id);
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    auto objective = [&]() {
        Matrix logits = forward(net, batch);
        double total = 0.0;
        for (int r = 0; r < logits.rows; ++r) {
            double mx = logits.at(r, 0);
            for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits.at(r, c));
            double sum = 0.0;
            for (int c = 0; c < logits.cols; ++c) sum += std::exp(logits.at(r, c) - mx);
            total += std::log(sum) + mx - logits.at(r, static_cast<std::size_t>(labels[static_cast<std::size_t>(r)]));
        }
        double loss = total / logits.rows;
        for (std::size_t k = 0; k < spec.layer_pairs.size(); ++k) {
            const auto deaths =
                birth_death_decompose(extract_subgraph(net, spec, static_cast<int>(k)))
                    .death_weights();
            loss += 0.5 * lambda *
                    wasserstein_cycle_distance(deaths, targets[k].death_values);
        }
        return loss;
    };

    MlpGrads grads = MlpGrads::zeros_like(net);
    backward_cross_entropy(net, batch, labels, grads);
    for (std::size_t k = 0; k < spec.layer_pairs.size(); ++k) {
        const PersistenceDescriptor desc =
            birth_death_decompose(extract_subgraph(net, spec, static_cast<int>(k)));
        const std::vector<double> edge_grads = wasserstein_cycle_gradient(desc, targets[k]);
        scatter_topo_gradient(grads, net, spec, static_cast<int>(k), edge_grads, lambda / 2.0);
    }

    const std::vector<std::vector<int>> base_ids = {death_ids_of(0)};

    int checked = 0, skipped = 0;
    for (int l = 0; l < net.num_weight_layers(); ++l) {
        for (std::size_t i = 0; i < net.weights[static_cast<std::size_t>(l)].size(); ++i) {
            float& p = net.weights[static_cast<std::size_t>(l)][i];
            const double orig = p;
            const double h = 1e-5 * std::max(1.0, std::abs(orig));
            p = static_cast<float>(orig + h);
            const double wp = p;
            const double lp = objective();
            const bool stable_plus = death_ids_of(0) == base_ids[0];
            p = static_cast<float>(orig - h);
            const double wm = p;
            const double lm = objective();
            const bool stable_minus = death_ids_of(0) == base_ids[0];
            p = static_cast<float>(orig);
            if (!stable_plus || !stable_minus) {
                ++skipped;
                continue;
            }
            const double fd = (lp - lm) / (wp - wm);
            const double analytic = grads.weights[static_cast<std::size_t>(l)][i];
            const double scale = std::max({1.0, std::abs(fd), std::abs(analytic)});
            CHECK(std::abs(fd - analytic) / scale < 1e-4);
            ++checked;
        }
    }
    CHECK(checked >= 20);  // 24 weights in total; only membership flips skip
}

TEST_CASE("the running barycenter equals the weighted batch barycenter") {
    const TaskStream stream = tiny_stream(5, 30, 5, 3, 31);
    for (const double p : {9.0, 1.0}) {
        CAPTURE(p);
        TrainerConfig config;
        config.hidden_sizes = {4};
        config.seed = 47;
        config.p = p;
        config.q = 1.0;

        Trainer trainer(stream, config, Method::top);
        trainer.run();
        const auto& history = trainer.death_history();
        REQUIRE(history.size() == 5);

        const double rho = config.q / (config.p + config.q);
        const int t = 5;
        std::vector<double> nu(static_cast<std::size_t>(t));
        nu[0] = std::pow(1.0 - rho, t - 1);
        for (int i = 2; i <= t; ++i) {
            nu[static_cast<std::size_t>(i - 1)] = rho * std::pow(1.0 - rho, t - i);
        }

        for (std::size_t k = 0; k < trainer.barycenters().size(); ++k) {
            std::vector<std::vector<double>> sets;
            for (int tau = 0; tau < t; ++tau) {
                sets.push_back(history[static_cast<std::size_t>(tau)][k]);
            }
            const CycleBarycenter batch = cycle_barycenter(sets, nu);
            const auto& online = trainer.barycenters()[k].death_values;
            REQUIRE(online.size() == batch.death_values.size());
            for (std::size_t i = 0; i < online.size(); ++i) {
                CHECK(std::abs(online[i] - batch.death_values[i]) <= 1e-6);
            }
        }
    }
}

TEST_CASE("decompositions follow the schedule and are logged") {
    // 3 tasks, 40 examples, batch 10: four iterations per task
    const TaskStream stream = tiny_stream(3, 40, 5, 3, 51);
    auto count_for_m = [&](int m) {
        TrainerConfig config;
        config.hidden_sizes = {4};
        config.seed = 53;
        config.m = m;
        Trainer trainer(stream, config, Method::top);
        return trainer.run().decomposition_count;
    };
    CHECK(count_for_m(1) == 8);  // every iteration of tasks 2 and 3
    CHECK(count_for_m(2) == 4);  // iterations 0 and 2
    CHECK(count_for_m(5) == 2);  // only iteration 0 of each later task
    CHECK(count_for_m(4) == 2);

    TrainerConfig config;
    config.hidden_sizes = {4};
    config.seed = 53;
    Trainer er(stream, config, Method::er);
    CHECK(er.run().decomposition_count == 0);
}

TEST_CASE("plain finetuning forgets the first task") {
    // Two tasks over the same input distribution with the label rule
    // inverted, so a net fine-tuned on task 2 must lose task-1 accuracy.
    Rng rng(4242);
    auto make = [&](int n, bool flip) {
        Dataset d;
        d.feature_dim = 4;
        for (int i = 0; i < n; ++i) {
            const int cls = static_cast<int>(rng.index(2));
            std::vector<float> x(4);
            x[0] = static_cast<float>((cls == 0 ? -1.0 : 1.0) + 0.3 * rng.normal());
            for (int j = 1; j < 4; ++j) x[static_cast<std::size_t>(j)] = static_cast<float>(0.3 * rng.normal());
            d.x.push_back(std::move(x));
            d.y.push_back(flip ? 1 - cls : cls);
        }
        return d;
    };
    TaskStream stream;
    stream.feature_dim = 4;
    stream.num_classes = 2;
    stream.description = "label-flip pair";
    stream.tasks.push_back({1, make(200, false), make(60, false)});
    stream.tasks.push_back({2, make(200, true), make(60, true)});

    TrainerConfig config;
    config.hidden_sizes = {16};
    config.seed = 73;
    const ExperimentReport report = run_experiment(stream, config, Method::finetune);
    CHECK(report.r.at(0, 0) > report.r.at(1, 0));  // accuracy on task 1 dropped
    CHECK(report.has_bwt);
    CHECK(report.bwt < 0.0);
}

TEST_CASE("multitask trains once and reports only the final row") {
    const TaskStream stream = tiny_stream(3, 60, 6, 3, 81);
    TrainerConfig config;
    config.hidden_sizes = {8};
    config.seed = 83;
    const ExperimentReport report = run_experiment(stream, config, Method::multitask);

    CHECK(!report.has_bwt);
    CHECK(report.r.num_tasks() == 3);
    CHECK(!report.r.defined(0, 0));
    CHECK(!report.r.defined(1, 1));
    for (int j = 0; j < 3; ++j) CHECK(report.r.defined(2, j));
    double mean = 0.0;
    for (int j = 0; j < 3; ++j) mean += report.r.at(2, j);
    CHECK(report.acc == doctest::Approx(mean / 3).epsilon(1e-12));
    CHECK(report.train_loss.size() == 1);
    CHECK(report.train_loss[0].size() == 18);  // 180 pooled examples / batch 10
    CHECK(report.decomposition_count == 0);
}

TEST_CASE("identical configurations produce byte-identical report files") {
    const TaskStream stream = tiny_stream(3, 50, 6, 3, 91);
    TrainerConfig config;
    config.hidden_sizes = {8};
    config.seed = 97;

    const auto dir = std::filesystem::temp_directory_path();
    const std::string path_a = (dir / "topocl_det_a.json").string();
    const std::string path_b = (dir / "topocl_det_b.json").string();
    write_report(run_experiment(stream, config, Method::top), path_a, ReportFormat::json);
    write_report(run_experiment(stream, config, Method::top), path_b, ReportFormat::json);
    const std::string a = file_contents(path_a);
    const std::string b = file_contents(path_b);
    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
    REQUIRE(!a.empty());
    CHECK(a == b);
}

TEST_CASE("training curves cover every task with one loss per iteration") {
    const TaskStream stream = tiny_stream(2, 35, 5, 3, 101);
    TrainerConfig config;
    config.hidden_sizes = {4};
    config.seed = 103;
    const ExperimentReport report = run_experiment(stream, config, Method::er);
    REQUIRE(report.train_loss.size() == 2);
    CHECK(report.train_loss[0].size() == 4);  // 35 examples, batch 10: 4 batches
    CHECK(report.train_loss[1].size() == 4);
    for (const auto& task_losses : report.train_loss) {
        for (double loss : task_losses) CHECK(loss > 0.0);
    }
}

TEST_CASE("a trainer refuses to run twice") {
    const TaskStream stream = tiny_stream(2, 30, 5, 3, 111);
    TrainerConfig config;
    config.hidden_sizes = {4};
    Trainer trainer(stream, config, Method::er);
    trainer.run();
    CHECK_THROWS_AS(trainer.run(), Error);
}
