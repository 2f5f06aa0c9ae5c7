#include "topocl/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace topocl {

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

void require_cell(int num_tasks, int after_task, int on_task) {
    if (after_task < 0 || after_task >= num_tasks || on_task < 0 || on_task > after_task) {
        throw IncompleteMatrix("cell (" + std::to_string(after_task) + ", " +
                               std::to_string(on_task) + ") is outside the lower triangle of a " +
                               std::to_string(num_tasks) + "-task matrix");
    }
}

}  // namespace

AccuracyMatrix::AccuracyMatrix(int num_tasks) : num_tasks_(num_tasks) {
    if (num_tasks < 1) throw IncompleteMatrix("matrix needs at least one task");
    r_.assign(static_cast<std::size_t>(num_tasks) * num_tasks, kUnset);
}

void AccuracyMatrix::set(int after_task, int on_task, double accuracy) {
    require_cell(num_tasks_, after_task, on_task);
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
        throw IncompleteMatrix("accuracy " + std::to_string(accuracy) + " outside [0, 1]");
    }
    r_[static_cast<std::size_t>(after_task) * num_tasks_ + on_task] = accuracy;
}

double AccuracyMatrix::at(int after_task, int on_task) const {
    require_cell(num_tasks_, after_task, on_task);
    const double v = r_[static_cast<std::size_t>(after_task) * num_tasks_ + on_task];
    if (std::isnan(v)) {
        throw IncompleteMatrix("cell (" + std::to_string(after_task) + ", " +
                               std::to_string(on_task) + ") was never filled");
    }
    return v;
}

bool AccuracyMatrix::defined(int after_task, int on_task) const {
    if (after_task < 0 || after_task >= num_tasks_ || on_task < 0 || on_task > after_task) {
        return false;
    }
    return !std::isnan(r_[static_cast<std::size_t>(after_task) * num_tasks_ + on_task]);
}

double compute_acc(const AccuracyMatrix& r) {
    const int t = r.num_tasks();
    if (t < 1) throw IncompleteMatrix("empty matrix");
    double sum = 0.0;
    for (int j = 0; j < t; ++j) sum += r.at(t - 1, j);
    return sum / t;
}

double compute_bwt(const AccuracyMatrix& r) {
    const int t = r.num_tasks();
    if (t < 1) throw IncompleteMatrix("empty matrix");
    if (t == 1) throw UndefinedForSingleTask("backward transfer needs at least two tasks");
    double sum = 0.0;
    for (int j = 0; j + 1 < t; ++j) sum += r.at(t - 1, j) - r.at(j, j);
    return sum / (t - 1);
}

namespace {

nlohmann::json matrix_to_json(const AccuracyMatrix& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < r.num_tasks(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j <= i; ++j) {
            if (r.defined(i, j)) {
                row.push_back(r.at(i, j));
            } else {
                row.push_back(nullptr);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

AccuracyMatrix matrix_from_json(const nlohmann::json& rows) {
    AccuracyMatrix r(static_cast<int>(rows.size()));
    for (int i = 0; i < r.num_tasks(); ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        for (int j = 0; j <= i && j < static_cast<int>(row.size()); ++j) {
            const auto& cell = row.at(static_cast<std::size_t>(j));
            if (!cell.is_null()) r.set(i, j, cell.get<double>());
        }
    }
    return r;
}

}  // namespace

void write_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");

    if (format == ReportFormat::csv) {
        // header plus one row per task; blanks above the diagonal
        out << "after_task";
        for (int j = 0; j < report.r.num_tasks(); ++j) out << ",task_" << (j + 1);
        out << '\n';
        out.precision(17);
        for (int i = 0; i < report.r.num_tasks(); ++i) {
            out << (i + 1);
            for (int j = 0; j < report.r.num_tasks(); ++j) {
                out << ',';
                if (report.r.defined(i, j)) out << report.r.at(i, j);
            }
            out << '\n';
        }
        if (!out) throw IoError("write failed for " + path);
        return;
    }

    nlohmann::json doc;
    doc["method"] = report.method;
    doc["dataset"] = report.dataset;
    doc["seed"] = report.seed;
    doc["num_tasks"] = report.r.num_tasks();
    doc["accuracy_matrix"] = matrix_to_json(report.r);
    doc["acc"] = report.acc;
    if (report.has_bwt) {
        doc["bwt"] = report.bwt;
    } else {
        doc["bwt"] = nullptr;
    }
    doc["train_loss"] = report.train_loss;
    doc["decomposition_count"] = report.decomposition_count;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [key, value] : report.config_echo) cfg[key] = value;
    doc["config"] = cfg;
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

ExperimentReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw IoError("malformed report " + path);

    ExperimentReport report;
    report.method = doc.at("method").get<std::string>();
    report.dataset = doc.at("dataset").get<std::string>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.r = matrix_from_json(doc.at("accuracy_matrix"));
    report.acc = doc.at("acc").get<double>();
    if (doc.at("bwt").is_null()) {
        report.has_bwt = false;
        report.bwt = 0.0;
    } else {
        report.has_bwt = true;
        report.bwt = doc.at("bwt").get<double>();
    }
    report.train_loss = doc.at("train_loss").get<std::vector<std::vector<double>>>();
    report.decomposition_count = doc.at("decomposition_count").get<long long>();
    for (const auto& [key, value] : doc.at("config").items()) {
        report.config_echo.emplace_back(key, value.get<std::string>());
    }
    return report;
}

MethodSummary summarize_runs(const std::vector<ExperimentReport>& reports) {
    if (reports.empty()) throw IncompleteMatrix("no runs to summarize");
    MethodSummary s;
    s.method = reports.front().method;
    s.runs = static_cast<int>(reports.size());
    s.has_bwt = true;
    for (const ExperimentReport& r : reports) {
        if (r.method != s.method) {
            throw IncompleteMatrix("mixed methods in one summary: " + s.method + " vs " + r.method);
        }
        s.mean_acc += r.acc;
        if (!r.has_bwt) s.has_bwt = false;
    }
    s.mean_acc /= s.runs;
    if (s.has_bwt) {
        for (const ExperimentReport& r : reports) s.mean_bwt += r.bwt;
        s.mean_bwt /= s.runs;
    }
    if (s.runs > 1) {
        double acc_ss = 0.0, bwt_ss = 0.0;
        for (const ExperimentReport& r : reports) {
            acc_ss += (r.acc - s.mean_acc) * (r.acc - s.mean_acc);
            if (s.has_bwt) bwt_ss += (r.bwt - s.mean_bwt) * (r.bwt - s.mean_bwt);
        }
        s.std_acc = std::sqrt(acc_ss / (s.runs - 1));
        if (s.has_bwt) s.std_bwt = std::sqrt(bwt_ss / (s.runs - 1));
    }
    return s;
}

void write_summary_csv(const std::vector<MethodSummary>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "method,runs,mean_acc,std_acc,mean_bwt,std_bwt\n";
    out.precision(17);
    for (const MethodSummary& s : rows) {
        out << s.method << ',' << s.runs << ',' << s.mean_acc << ',' << s.std_acc << ',';
        if (s.has_bwt) {
            out << s.mean_bwt << ',' << s.std_bwt;
        } else {
            out << ',';
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace topocl
