#include "topocl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "topocl/persistence.hpp"
#include "topocl/rng.hpp"

namespace topocl {

std::string method_name(Method method, MemoryStrategy strategy) {
    const char* suffix = strategy == MemoryStrategy::ring ? "-ring" : "-res";
    switch (method) {
        case Method::finetune: return "finetune";
        case Method::multitask: return "multitask";
        case Method::er: return std::string("er") + suffix;
        case Method::top: return std::string("top") + suffix;
    }
    throw Error("unreachable method");
}

void parse_method(const std::string& name, Method& method, MemoryStrategy& strategy) {
    strategy = MemoryStrategy::ring;
    if (name == "finetune") {
        method = Method::finetune;
    } else if (name == "multitask") {
        method = Method::multitask;
    } else if (name == "er-ring") {
        method = Method::er;
    } else if (name == "er-res") {
        method = Method::er;
        strategy = MemoryStrategy::reservoir;
    } else if (name == "top-ring") {
        method = Method::top;
    } else if (name == "top-res") {
        method = Method::top;
        strategy = MemoryStrategy::reservoir;
    } else {
        throw InvalidSpec("unknown method '" + name +
                          "' (expected finetune | er-ring | er-res | top-ring | top-res | "
                          "multitask)");
    }
}

void validate_config(const TrainerConfig& config) {
    if (config.lambda < 0.0) throw InvalidSpec("lambda must be non-negative");
    if (config.m < 1) throw InvalidSpec("m must be at least 1");
    if (config.p <= 0.0 || config.q <= 0.0) throw InvalidSpec("p and q must be positive");
    if (config.gamma <= 0.0) throw InvalidSpec("learning rate must be positive");
    if (config.batch_size < 1) throw InvalidSpec("batch size must be at least 1");
    if (config.replay_batch_size < 1) throw InvalidSpec("replay batch size must be at least 1");
    if (config.mem_per_class < 0) throw InvalidSpec("memory per class must be non-negative");
    if (config.hidden_sizes.empty()) throw InvalidSpec("need at least one hidden layer");
    for (int h : config.hidden_sizes) {
        if (h < 1) throw InvalidSpec("hidden sizes must be positive");
    }
}

namespace {

std::vector<int> network_shape(const TaskStream& stream, const TrainerConfig& config) {
    std::vector<int> sizes;
    sizes.push_back(stream.feature_dim);
    for (int h : config.hidden_sizes) sizes.push_back(h);
    sizes.push_back(stream.num_classes);
    return sizes;
}

void require_stream(const TaskStream& stream) {
    if (stream.tasks.empty()) throw InsufficientData("task stream is empty");
    if (stream.feature_dim < 1) throw InsufficientData("stream has no features");
    if (stream.num_classes < 2) throw InsufficientData("need at least two classes");
    for (const Task& task : stream.tasks) {
        if (task.train.size() < 1) throw InsufficientData("a task has no training data");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Validates before any member construction touches the inputs.
const TaskStream& checked(const TaskStream& stream, const TrainerConfig& config) {
    validate_config(config);
    require_stream(stream);
    return stream;
}

}  // namespace

Trainer::Trainer(const TaskStream& stream, const TrainerConfig& config, Method method)
    : stream_(&checked(stream, config)),
      config_(config),
      method_(method),
      use_memory_(method == Method::er || method == Method::top),
      use_topo_(method == Method::top && config.lambda > 0.0),
      net_(Mlp::init(network_shape(stream, config),
                     derive_seed(config.seed, seed_stream::kNetInit))),
      grads_(MlpGrads::zeros_like(net_)),
      spec_(SubgraphSpec::output_side(net_, config.transform)),
      memory_(config.memory_strategy,
              use_memory_ ? config.mem_per_class * stream.num_classes : 0, stream.num_classes,
              derive_seed(config.seed, seed_stream::kMemory)) {
    train_loss_.resize(stream_->tasks.size());
    if (use_topo_) {
        barycenters_.resize(spec_.layer_pairs.size());
        cached_death_ids_.resize(spec_.layer_pairs.size());
    }
}

double Trainer::evaluate(const Dataset& test) const {
    if (test.size() == 0) throw InsufficientData("empty test set");
    Matrix batch(test.size(), stream_->feature_dim);
    for (int i = 0; i < test.size(); ++i) {
        const auto& row = test.x[static_cast<std::size_t>(i)];
        for (int j = 0; j < stream_->feature_dim; ++j) {
            batch.at(i, j) = row[static_cast<std::size_t>(j)];
        }
    }
    const Matrix logits = forward(net_, batch);
    int correct = 0;
    for (int i = 0; i < logits.rows; ++i) {
        int best = 0;
        for (int c = 1; c < logits.cols; ++c) {
            if (logits.at(i, c) > logits.at(i, best)) best = c;
        }
        if (best == test.y[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / logits.rows;
}

void Trainer::refresh_death_membership() {
    for (std::size_t k = 0; k < spec_.layer_pairs.size(); ++k) {
        const PersistenceDescriptor desc =
            birth_death_decompose(extract_subgraph(net_, spec_, static_cast<int>(k)));
        auto& ids = cached_death_ids_[k];
        ids.clear();
        for (const EdgeValue& e : desc.deaths) ids.push_back(e.edge_id);
    }
    ++decomposition_count_;
}

void Trainer::add_topo_gradient() {
    for (std::size_t k = 0; k < spec_.layer_pairs.size(); ++k) {
        const auto& ids = cached_death_ids_[k];
        if (ids.empty()) continue;

        // re-sort the cached death edges under their current weights; the
        // optimal matching then pairs by rank against the barycenter
        const int layer = spec_.layer_pairs[k].first;
        std::vector<EdgeValue> deaths;
        deaths.reserve(ids.size());
        for (int id : ids) {
            double w = net_.weights[static_cast<std::size_t>(layer)][static_cast<std::size_t>(id)];
            if (spec_.transform == WeightTransform::absolute) w = std::abs(w);
            deaths.push_back({w, id});
        }
        std::sort(deaths.begin(), deaths.end(), [](const EdgeValue& a, const EdgeValue& b) {
            if (a.weight != b.weight) return a.weight < b.weight;
            return a.edge_id < b.edge_id;
        });

        const auto& target = barycenters_[k].death_values;
        if (deaths.size() != target.size()) {
            throw CardinalityMismatch("death set of subgraph " + std::to_string(k) + " has " +
                                      std::to_string(deaths.size()) + " cycles, barycenter has " +
                                      std::to_string(target.size()));
        }
        const int n_in = net_.layer_sizes[static_cast<std::size_t>(layer)];
        const int n_out = net_.layer_sizes[static_cast<std::size_t>(layer) + 1];
        const std::vector<double> edge_grads =
            cycle_gradient_from_sorted(deaths, target, n_in * n_out);
        // the loss carries lambda/2, and the distance gradient is 2*(w - match),
        // so the scattered term is exactly lambda * (w - match)
        scatter_topo_gradient(grads_, net_, spec_, static_cast<int>(k), edge_grads,
                              config_.lambda / 2.0);
    }
}

std::vector<double> Trainer::fresh_death_set(int k) const {
    return birth_death_decompose(extract_subgraph(net_, spec_, k)).death_weights();
}

void Trainer::finish_task_barycenters(int task_index) {
    if (!use_topo_) return;
    std::vector<std::vector<double>> snapshot;
    for (std::size_t k = 0; k < spec_.layer_pairs.size(); ++k) {
        std::vector<double> deaths = fresh_death_set(static_cast<int>(k));
        if (task_index == 0) {
            barycenters_[k].death_values = deaths;
            barycenters_[k].total_weight = 1.0;
        } else {
            barycenters_[k] =
                barycenter_online_update(barycenters_[k], deaths, config_.p, config_.q);
        }
        snapshot.push_back(std::move(deaths));
    }
    death_history_.push_back(std::move(snapshot));
}

void Trainer::train_task_batches(int task_index, bool with_replay, bool with_topo) {
    const Dataset& train = stream_->tasks[static_cast<std::size_t>(task_index)].train;
    std::vector<int> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config_.seed,
                                seed_stream::kTaskShuffleBase + static_cast<std::uint64_t>(task_index)));
    shuffle_rng.shuffle(order);

    auto& losses = train_loss_[static_cast<std::size_t>(task_index)];
    int iter = 0;
    for (int start = 0; start < train.size(); start += config_.batch_size) {
        const int current_n = std::min(config_.batch_size, train.size() - start);
        std::vector<MemoryItem> replay;
        if (with_replay) replay = memory_.sample(config_.replay_batch_size);

        const int total_n = current_n + static_cast<int>(replay.size());
        Matrix batch(total_n, stream_->feature_dim);
        std::vector<int> labels(static_cast<std::size_t>(total_n));
        for (int i = 0; i < current_n; ++i) {
            const int src = order[static_cast<std::size_t>(start + i)];
            const auto& row = train.x[static_cast<std::size_t>(src)];
            for (int j = 0; j < stream_->feature_dim; ++j) {
                batch.at(i, j) = row[static_cast<std::size_t>(j)];
            }
            labels[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(src)];
        }
        for (std::size_t r = 0; r < replay.size(); ++r) {
            const int dst = current_n + static_cast<int>(r);
            for (int j = 0; j < stream_->feature_dim; ++j) {
                batch.at(dst, j) = replay[r].x[static_cast<std::size_t>(j)];
            }
            labels[static_cast<std::size_t>(dst)] = replay[r].label;
        }

        if (with_topo && iter % config_.m == 0) refresh_death_membership();

        grads_.clear();
        losses.push_back(backward_cross_entropy(net_, batch, labels, grads_));
        if (with_topo) add_topo_gradient();
        sgd_step(net_, grads_, config_.gamma);

        if (use_memory_) {
            for (int i = 0; i < current_n; ++i) {
                const int src = order[static_cast<std::size_t>(start + i)];
                MemoryItem item;
                item.x = train.x[static_cast<std::size_t>(src)];
                item.label = train.y[static_cast<std::size_t>(src)];
                item.task_id = task_index + 1;
                memory_.update(item);
            }
        }
        ++iter;
    }
}

void Trainer::train_first_task() {
    train_task_batches(0, /*with_replay=*/false, /*with_topo=*/false);
    finish_task_barycenters(0);
}

void Trainer::train_later_task(int task_index) {
    if (task_index < 1 || task_index >= static_cast<int>(stream_->tasks.size())) {
        throw InvalidSpec("later-task index out of range");
    }
    train_task_batches(task_index, /*with_replay=*/use_memory_, /*with_topo=*/use_topo_);
    finish_task_barycenters(task_index);
}

void Trainer::run_multitask(ExperimentReport& report) {
    // flatten every task's training set into one shuffled pass
    std::vector<std::pair<int, int>> pool;  // (task, example)
    for (std::size_t t = 0; t < stream_->tasks.size(); ++t) {
        for (int i = 0; i < stream_->tasks[t].train.size(); ++i) {
            pool.emplace_back(static_cast<int>(t), i);
        }
    }
    Rng shuffle_rng(derive_seed(config_.seed, seed_stream::kMultitaskShuffle));
    shuffle_rng.shuffle(pool);

    auto& losses = train_loss_[0];
    const int n = static_cast<int>(pool.size());
    for (int start = 0; start < n; start += config_.batch_size) {
        const int count = std::min(config_.batch_size, n - start);
        Matrix batch(count, stream_->feature_dim);
        std::vector<int> labels(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const auto [t, src] = pool[static_cast<std::size_t>(start + i)];
            const Dataset& train = stream_->tasks[static_cast<std::size_t>(t)].train;
            for (int j = 0; j < stream_->feature_dim; ++j) {
                batch.at(i, j) = train.x[static_cast<std::size_t>(src)][static_cast<std::size_t>(j)];
            }
            labels[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(src)];
        }
        grads_.clear();
        losses.push_back(backward_cross_entropy(net_, batch, labels, grads_));
        sgd_step(net_, grads_, config_.gamma);
    }

    // one joint model: only the final row of the matrix is meaningful
    const int t = static_cast<int>(stream_->tasks.size());
    for (int j = 0; j < t; ++j) {
        report.r.set(t - 1, j, evaluate(stream_->tasks[static_cast<std::size_t>(j)].test));
    }
    report.acc = compute_acc(report.r);
    report.has_bwt = false;
}

std::vector<std::pair<std::string, std::string>> Trainer::config_echo() const {
    std::vector<std::pair<std::string, std::string>> echo;
    echo.emplace_back("method", method_name(method_, config_.memory_strategy));
    echo.emplace_back("dataset", stream_->description);
    echo.emplace_back("num_tasks", std::to_string(stream_->tasks.size()));
    echo.emplace_back("feature_dim", std::to_string(stream_->feature_dim));
    echo.emplace_back("num_classes", std::to_string(stream_->num_classes));
    echo.emplace_back("lambda", format_double(config_.lambda));
    echo.emplace_back("m", std::to_string(config_.m));
    echo.emplace_back("p", format_double(config_.p));
    echo.emplace_back("q", format_double(config_.q));
    echo.emplace_back("gamma", format_double(config_.gamma));
    echo.emplace_back("batch_size", std::to_string(config_.batch_size));
    echo.emplace_back("replay_batch_size", std::to_string(config_.replay_batch_size));
    echo.emplace_back("mem_per_class", std::to_string(config_.mem_per_class));
    echo.emplace_back("memory_strategy",
                      config_.memory_strategy == MemoryStrategy::ring ? "ring" : "reservoir");
    std::string hidden;
    for (std::size_t i = 0; i < config_.hidden_sizes.size(); ++i) {
        if (i) hidden += ',';
        hidden += std::to_string(config_.hidden_sizes[i]);
    }
    echo.emplace_back("hidden_sizes", hidden);
    echo.emplace_back("transform",
                      spec_.transform == WeightTransform::raw ? "raw" : "absolute");
    echo.emplace_back("seed", std::to_string(config_.seed));
    return echo;
}

ExperimentReport Trainer::run() {
    if (ran_) throw Error("a Trainer runs exactly one experiment");
    ran_ = true;

    const int t = static_cast<int>(stream_->tasks.size());
    ExperimentReport report;
    report.method = method_name(method_, config_.memory_strategy);
    report.dataset = stream_->description;
    report.seed = config_.seed;
    report.r = AccuracyMatrix(t);
    report.config_echo = config_echo();

    if (method_ == Method::multitask) {
        train_loss_.assign(1, {});
        run_multitask(report);
    } else {
        train_first_task();
        report.r.set(0, 0, evaluate(stream_->tasks[0].test));
        for (int i = 1; i < t; ++i) {
            train_later_task(i);
            for (int j = 0; j <= i; ++j) {
                report.r.set(i, j, evaluate(stream_->tasks[static_cast<std::size_t>(j)].test));
            }
        }
        report.acc = compute_acc(report.r);
        if (t >= 2) {
            report.bwt = compute_bwt(report.r);
            report.has_bwt = true;
        }
    }

    report.train_loss = train_loss_;
    report.decomposition_count = decomposition_count_;
    return report;
}

ExperimentReport run_experiment(const TaskStream& stream, const TrainerConfig& config,
                                Method method) {
    Trainer trainer(stream, config, method);
    return trainer.run();
}

}  // namespace topocl
