#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "topocl/errors.hpp"

namespace topocl {

// Lower-triangular accuracy bookkeeping: at(i, j) is the test accuracy on
// task j (0-based) measured after finishing task i, defined for j <= i.
// Unset entries hold a NaN sentinel.
class AccuracyMatrix {
public:
    AccuracyMatrix() = default;
    explicit AccuracyMatrix(int num_tasks);

    int num_tasks() const { return num_tasks_; }
    void set(int after_task, int on_task, double accuracy);
    double at(int after_task, int on_task) const;
    bool defined(int after_task, int on_task) const;

private:
    int num_tasks_ = 0;
    std::vector<double> r_;
};

// Mean of the final row: (1/T) * sum_j R[T-1][j].
double compute_acc(const AccuracyMatrix& r);

// Mean forgetting over past tasks: (1/(T-1)) * sum_{j<T-1} (R[T-1][j] -
// R[j][j]). Negative values mean later training hurt earlier tasks.
double compute_bwt(const AccuracyMatrix& r);

// One experiment's results. Timing is kept out of this structure's files on
// purpose: reports from identical (config, seed) runs are byte-identical,
// and wall-clock lives in the run manifest instead.
struct ExperimentReport {
    std::string method;
    std::string dataset;
    std::uint64_t seed = 0;
    AccuracyMatrix r;
    double acc = 0.0;
    double bwt = 0.0;
    bool has_bwt = false;  // single-row protocols (multitask, T=1) omit it
    std::vector<std::vector<double>> train_loss;  // per task, per iteration
    long long decomposition_count = 0;
    std::vector<std::pair<std::string, std::string>> config_echo;
};

enum class ReportFormat { json, csv };

// json holds the full report and reads back exactly; csv is a plot-ready
// matrix dump (header plus one row per task).
void write_report(const ExperimentReport& report, const std::string& path, ReportFormat format);
ExperimentReport read_report(const std::string& path);

// Across-seed summary for one method, standard deviation with the n-1
// estimator (zero when only one run).
struct MethodSummary {
    std::string method;
    int runs = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    double mean_bwt = 0.0;
    double std_bwt = 0.0;
    bool has_bwt = false;
};

MethodSummary summarize_runs(const std::vector<ExperimentReport>& reports);
void write_summary_csv(const std::vector<MethodSummary>& rows, const std::string& path);

}  // namespace topocl
