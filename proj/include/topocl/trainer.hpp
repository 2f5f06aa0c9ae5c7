#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topocl/data.hpp"
#include "topocl/memory.hpp"
#include "topocl/metrics.hpp"
#include "topocl/mlp.hpp"
#include "topocl/subgraph.hpp"
#include "topocl/wasserstein.hpp"

namespace topocl {

// finetune: sequential SGD, no memory, no penalty. er: adds replay from the
// episodic buffer. top: adds the cycle-structure penalty on top of replay.
// multitask: one pass over the shuffled union of all tasks, as an upper
// bound rather than a continual strategy.
enum class Method { finetune, er, top, multitask };

std::string method_name(Method method, MemoryStrategy strategy);
// Accepts finetune | er-ring | er-res | top-ring | top-res | multitask.
void parse_method(const std::string& name, Method& method, MemoryStrategy& strategy);

struct TrainerConfig {
    double lambda = 1.0;  // penalty weight; zero reduces top to er exactly
    int m = 5;            // iterations between birth-death decompositions
    double p = 9.0;       // running-barycenter weight on the old estimate
    double q = 1.0;       // running-barycenter weight on the fresh death set
    double gamma = 0.1;   // SGD learning rate
    int batch_size = 10;
    int replay_batch_size = 10;
    int mem_per_class = 1;  // buffer capacity is this times the class count
    MemoryStrategy memory_strategy = MemoryStrategy::ring;
    std::vector<int> hidden_sizes = {64, 64};
    WeightTransform transform = WeightTransform::raw;
    std::uint64_t seed = 0;
};

void validate_config(const TrainerConfig& config);

// Sub-stream labels for deriving independent generator seeds from the one
// user-facing seed; part of the determinism contract.
namespace seed_stream {
inline constexpr std::uint64_t kNetInit = 0xA1;
inline constexpr std::uint64_t kMemory = 0xA2;
inline constexpr std::uint64_t kMultitaskShuffle = 0xA4;
inline constexpr std::uint64_t kTaskShuffleBase = 0xB000;  // plus task index
}  // namespace seed_stream

// One experiment: a model, an episodic buffer, per-subgraph barycenters and
// cached death-edge memberships. Training walks the task stream in order;
// every held-out test set j <= i is evaluated after task i.
class Trainer {
public:
    Trainer(const TaskStream& stream, const TrainerConfig& config, Method method);

    // The full protocol; call once per Trainer.
    ExperimentReport run();

    // Exposed for step-level verification.
    void train_first_task();
    void train_later_task(int task_index);

    const Mlp& net() const { return net_; }
    const std::vector<CycleBarycenter>& barycenters() const { return barycenters_; }
    // Sorted death sets captured at the end of each task, per subgraph;
    // recorded only when the penalty machinery is active.
    const std::vector<std::vector<std::vector<double>>>& death_history() const {
        return death_history_;
    }
    long long decomposition_count() const { return decomposition_count_; }

private:
    const TaskStream* stream_;
    TrainerConfig config_;
    Method method_;
    bool use_memory_;
    bool use_topo_;

    Mlp net_;
    MlpGrads grads_;
    SubgraphSpec spec_;
    EpisodicMemory memory_;
    std::vector<CycleBarycenter> barycenters_;
    std::vector<std::vector<int>> cached_death_ids_;  // per subgraph
    std::vector<std::vector<double>> train_loss_;
    std::vector<std::vector<std::vector<double>>> death_history_;
    long long decomposition_count_ = 0;
    bool ran_ = false;

    void train_task_batches(int task_index, bool with_replay, bool with_topo);
    void refresh_death_membership();
    void add_topo_gradient();
    std::vector<double> fresh_death_set(int k) const;
    void finish_task_barycenters(int task_index);
    double evaluate(const Dataset& test) const;
    void run_multitask(ExperimentReport& report);
    std::vector<std::pair<std::string, std::string>> config_echo() const;
};

ExperimentReport run_experiment(const TaskStream& stream, const TrainerConfig& config,
                                Method method);

}  // namespace topocl
