// Command-line driver: single experiments, method comparisons, hyperparameter
// sweeps, self-verification, and task-stream generation.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error, 3 verification failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "topocl/data.hpp"
#include "topocl/metrics.hpp"
#include "topocl/trainer.hpp"
#include "topocl/verify.hpp"
#include "topocl/wasserstein.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace topocl;

namespace {

struct Flags {
    // dataset
    std::string dataset = "synthetic";
    std::string data_dir;
    int tasks = 5;
    int per_task = 1000;
    int test_per_task = 500;
    int feature_dim = 196;
    int classes = 10;
    double spread = 1.0;
    double noise = 0.5;
    bool evenly_spaced = false;
    bool full_res = false;
    // trainer
    double lambda = 1.0;
    int m = 5;
    double p = 9.0;
    double q = 1.0;
    double lr = 0.1;
    int batch = 10;
    int replay_batch = 10;
    int mem_per_class = 1;
    std::vector<int> hidden = {64, 64};
    std::string transform = "raw";
    // plumbing
    std::string method = "top-ring";
    std::vector<std::string> methods = {"finetune", "er-ring", "top-ring"};
    std::uint64_t seed = 7;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string config_path;
    std::string out = "runs";
    // sweep
    std::string param = "lambda";
    std::vector<double> values;
};

const std::vector<std::string> kMethods = {"finetune", "er-ring", "er-res",
                                           "top-ring", "top-res", "multitask"};

void add_data_options(CLI::App* sub, Flags& f) {
    sub->add_option("--dataset", f.dataset, "Task stream: synthetic, permuted, or rotated")
        ->check(CLI::IsMember({"synthetic", "permuted", "rotated"}));
    sub->add_option("--data-dir", f.data_dir,
                    "Directory with IDX files (overrides TOPOCL_DATA_DIR)");
    sub->add_option("--tasks", f.tasks, "Number of tasks")->check(CLI::PositiveNumber);
    sub->add_option("--per-task", f.per_task, "Training examples per task")
        ->check(CLI::PositiveNumber);
    sub->add_option("--test-per-task", f.test_per_task, "Test examples per task")
        ->check(CLI::PositiveNumber);
    sub->add_option("--feature-dim", f.feature_dim, "Synthetic feature dimension")
        ->check(CLI::PositiveNumber);
    sub->add_option("--classes", f.classes, "Synthetic class count")->check(CLI::PositiveNumber);
    sub->add_option("--spread", f.spread, "Synthetic class-mean scale");
    sub->add_option("--noise", f.noise, "Synthetic within-class noise");
    sub->add_flag("--evenly-spaced", f.evenly_spaced, "Evenly spaced rotation angles");
    sub->add_flag("--full-res", f.full_res, "Skip the 2x image downsampling");
}

void add_trainer_options(CLI::App* sub, Flags& f) {
    sub->add_option("--lambda", f.lambda, "Topological penalty strength")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--m", f.m, "Iterations between death-set refreshes")
        ->check(CLI::PositiveNumber);
    sub->add_option("--p", f.p, "Barycenter weight on the running estimate")
        ->check(CLI::PositiveNumber);
    sub->add_option("--q", f.q, "Barycenter weight on the newest task")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lr", f.lr, "Learning rate")->check(CLI::PositiveNumber);
    sub->add_option("--batch", f.batch, "Batch size")->check(CLI::PositiveNumber);
    sub->add_option("--replay-batch", f.replay_batch, "Replay examples per step")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mem-per-class", f.mem_per_class, "Memory slots per class")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--hidden", f.hidden, "Hidden layer sizes")->delimiter(',');
    sub->add_option("--transform", f.transform, "Edge weights: raw or absolute")
        ->check(CLI::IsMember({"raw", "absolute"}));
    sub->add_option("--config", f.config_path, "JSON config file (defaults < file < flags)");
}

WeightTransform parse_transform(const std::string& name) {
    if (name == "raw") return WeightTransform::raw;
    if (name == "absolute") return WeightTransform::absolute;
    throw InvalidSpec("unknown transform '" + name + "'");
}

MemoryStrategy parse_strategy(const std::string& name) {
    if (name == "ring") return MemoryStrategy::ring;
    if (name == "reservoir") return MemoryStrategy::reservoir;
    throw InvalidSpec("unknown memory strategy '" + name + "'");
}

// Applies the config file between the defaults and the command-line flags.
// Keys mirror the trainer config field names.
void resolve_config(const CLI::App* sub, const Flags& f, TrainerConfig& cfg,
                    bool method_flag_given, MemoryStrategy flag_strategy) {
    bool file_set_strategy = false;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw CLI::ValidationError("--config", "cannot open " + f.config_path);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw CLI::ValidationError("--config", e.what());
        }
        for (const auto& [key, value] : doc.items()) {
            if (key == "lambda") cfg.lambda = value.get<double>();
            else if (key == "m") cfg.m = value.get<int>();
            else if (key == "p") cfg.p = value.get<double>();
            else if (key == "q") cfg.q = value.get<double>();
            else if (key == "gamma") cfg.gamma = value.get<double>();
            else if (key == "batch_size") cfg.batch_size = value.get<int>();
            else if (key == "replay_batch_size") cfg.replay_batch_size = value.get<int>();
            else if (key == "mem_per_class") cfg.mem_per_class = value.get<int>();
            else if (key == "hidden_sizes") cfg.hidden_sizes = value.get<std::vector<int>>();
            else if (key == "transform") cfg.transform = parse_transform(value.get<std::string>());
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "memory_strategy") {
                cfg.memory_strategy = parse_strategy(value.get<std::string>());
                file_set_strategy = true;
            } else {
                throw CLI::ValidationError("--config", "unknown key '" + key + "'");
            }
        }
    }
    if (sub->count("--lambda")) cfg.lambda = f.lambda;
    if (sub->count("--m")) cfg.m = f.m;
    if (sub->count("--p")) cfg.p = f.p;
    if (sub->count("--q")) cfg.q = f.q;
    if (sub->count("--lr")) cfg.gamma = f.lr;
    if (sub->count("--batch")) cfg.batch_size = f.batch;
    if (sub->count("--replay-batch")) cfg.replay_batch_size = f.replay_batch;
    if (sub->count("--mem-per-class")) cfg.mem_per_class = f.mem_per_class;
    if (sub->count("--hidden")) cfg.hidden_sizes = f.hidden;
    if (sub->count("--transform")) cfg.transform = parse_transform(f.transform);
    if (method_flag_given || !file_set_strategy) cfg.memory_strategy = flag_strategy;
}

TaskStream build_stream(const Flags& f, std::uint64_t seed) {
    if (f.dataset == "synthetic") {
        SyntheticParams params;
        params.num_tasks = f.tasks;
        params.num_classes = f.classes;
        params.feature_dim = f.feature_dim;
        params.train_per_task = f.per_task;
        params.test_per_task = f.test_per_task;
        params.spread = f.spread;
        params.noise = f.noise;
        params.seed = seed;
        return make_synthetic_tasks(params);
    }
    std::string dir = f.data_dir;
    if (dir.empty()) {
        if (const char* env = std::getenv("TOPOCL_DATA_DIR")) dir = env;
        else dir = ".";
    }
    Dataset train = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
    Dataset test = load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");
    if (!f.full_res && train.img_rows % 2 == 0 && train.img_cols % 2 == 0) {
        train = downsample2x(train);
        test = downsample2x(test);
    }
    StreamParams params;
    params.num_tasks = f.tasks;
    params.train_per_task = f.per_task;
    params.test_per_task = f.test_per_task;
    params.seed = seed;
    if (f.dataset == "permuted") return make_permuted_tasks(train, test, params);
    return make_rotated_tasks(train, test, params, f.evenly_spaced);
}

json dataset_block(const Flags& f) {
    json j;
    j["dataset"] = f.dataset;
    j["tasks"] = f.tasks;
    j["per_task"] = f.per_task;
    j["test_per_task"] = f.test_per_task;
    if (f.dataset == "synthetic") {
        j["feature_dim"] = f.feature_dim;
        j["classes"] = f.classes;
        j["spread"] = f.spread;
        j["noise"] = f.noise;
    } else {
        j["data_dir"] = f.data_dir;
        j["full_res"] = f.full_res;
        if (f.dataset == "rotated") j["evenly_spaced"] = f.evenly_spaced;
    }
    return j;
}

json config_block(const ExperimentReport& report) {
    json j;
    for (const auto& [key, value] : report.config_echo) j[key] = value;
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string bwt_text(const ExperimentReport& report) {
    if (!report.has_bwt) return "--";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", report.bwt);
    return buf;
}

int cmd_run(const CLI::App* sub, Flags& f) {
    Method method;
    MemoryStrategy strategy;
    parse_method(f.method, method, strategy);
    TrainerConfig cfg;
    resolve_config(sub, f, cfg, sub->count("--method") > 0, strategy);
    cfg.seed = f.seed;

    fs::create_directories(f.out);
    const auto t0 = std::chrono::steady_clock::now();
    const TaskStream stream = build_stream(f, f.seed);
    const ExperimentReport report = run_experiment(stream, cfg, method);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path out(f.out);
    write_report(report, (out / "report.json").string(), ReportFormat::json);
    write_report(report, (out / "report.csv").string(), ReportFormat::csv);

    json manifest;
    manifest["command"] = "run";
    manifest["dataset"] = dataset_block(f);
    manifest["config"] = config_block(report);
    manifest["outputs"] = {"report.json", "report.csv"};
    manifest["wall_clock_seconds"] = elapsed;
    write_json_file(out / "manifest.json", manifest);

    std::printf("%-10s %-9s seed %llu  ACC %.4f  BWT %s  refreshes %lld  (%.1f s)\n",
                report.method.c_str(), f.dataset.c_str(),
                static_cast<unsigned long long>(f.seed), report.acc, bwt_text(report).c_str(),
                static_cast<long long>(report.decomposition_count), elapsed);
    return 0;
}

void print_summary_table(const std::vector<MethodSummary>& rows) {
    std::printf("%-10s %5s %10s %9s %10s %9s\n", "method", "runs", "mean_acc", "std_acc",
                "mean_bwt", "std_bwt");
    for (const MethodSummary& s : rows) {
        if (s.has_bwt) {
            std::printf("%-10s %5d %10.4f %9.4f %10.4f %9.4f\n", s.method.c_str(), s.runs,
                        s.mean_acc, s.std_acc, s.mean_bwt, s.std_bwt);
        } else {
            std::printf("%-10s %5d %10.4f %9.4f %10s %9s\n", s.method.c_str(), s.runs, s.mean_acc,
                        s.std_acc, "--", "--");
        }
    }
}

int cmd_compare(const CLI::App* sub, Flags& f) {
    fs::create_directories(f.out);
    const fs::path out(f.out);
    const auto t0 = std::chrono::steady_clock::now();

    std::map<std::string, std::vector<ExperimentReport>> by_method;
    for (const std::uint64_t seed : f.seeds) {
        const TaskStream stream = build_stream(f, seed);
        for (const std::string& name : f.methods) {
            Method method;
            MemoryStrategy strategy;
            parse_method(name, method, strategy);
            TrainerConfig cfg;
            resolve_config(sub, f, cfg, true, strategy);
            cfg.seed = seed;
            ExperimentReport report = run_experiment(stream, cfg, method);
            write_report(report,
                         (out / (name + "-seed" + std::to_string(seed) + ".json")).string(),
                         ReportFormat::json);
            by_method[name].push_back(std::move(report));
        }
    }

    std::vector<MethodSummary> rows;
    for (const std::string& name : f.methods) rows.push_back(summarize_runs(by_method[name]));
    write_summary_csv(rows, (out / "summary.csv").string());
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["command"] = "compare";
    manifest["dataset"] = dataset_block(f);
    manifest["methods"] = f.methods;
    manifest["seeds"] = f.seeds;
    manifest["config"] = config_block(by_method[f.methods.front()].front());
    manifest["outputs"] = {"summary.csv"};
    manifest["wall_clock_seconds"] = elapsed;
    write_json_file(out / "manifest.json", manifest);

    print_summary_table(rows);
    std::printf("(%zu runs, %.1f s)\n", f.seeds.size() * f.methods.size(), elapsed);
    return 0;
}

int cmd_sweep(const CLI::App* sub, Flags& f) {
    if (f.values.empty()) {
        std::cerr << "sweep: --values must list at least one grid point\n";
        return 1;
    }
    for (const double v : f.values) {
        if ((f.param == "m" || f.param == "mem-per-class") &&
            (v != std::floor(v) || v < (f.param == "m" ? 1.0 : 0.0))) {
            std::cerr << "sweep: --values for " << f.param << " must be suitable integers\n";
            return 1;
        }
        if (f.param == "lambda" && v < 0.0) {
            std::cerr << "sweep: lambda values must be non-negative\n";
            return 1;
        }
    }

    Method method;
    MemoryStrategy strategy;
    parse_method(f.method, method, strategy);
    fs::create_directories(f.out);
    const fs::path out(f.out);
    const auto t0 = std::chrono::steady_clock::now();

    std::map<std::uint64_t, TaskStream> streams;
    for (const std::uint64_t seed : f.seeds) streams.emplace(seed, build_stream(f, seed));

    std::ofstream csv(out / "sweep.csv");
    if (!csv) throw IoError("cannot write " + (out / "sweep.csv").string());
    csv << "param,value,runs,mean_acc,std_acc,mean_bwt,std_bwt,mean_refreshes\n";
    std::printf("%-14s %8s %10s %10s %12s\n", "param", "value", "mean_acc", "mean_bwt",
                "refreshes");

    for (const double value : f.values) {
        char tag[32];
        std::snprintf(tag, sizeof(tag), "%g", value);
        std::vector<ExperimentReport> runs;
        double refreshes = 0.0;
        for (const std::uint64_t seed : f.seeds) {
            TrainerConfig cfg;
            resolve_config(sub, f, cfg, true, strategy);
            if (f.param == "lambda") cfg.lambda = value;
            else if (f.param == "m") cfg.m = static_cast<int>(value);
            else cfg.mem_per_class = static_cast<int>(value);
            cfg.seed = seed;
            ExperimentReport report = run_experiment(streams.at(seed), cfg, method);
            refreshes += report.decomposition_count;
            const fs::path dir = out / (f.param + "-" + tag);
            fs::create_directories(dir);
            write_report(report, (dir / (f.method + "-seed" + std::to_string(seed) + ".json")).string(),
                         ReportFormat::json);
            runs.push_back(std::move(report));
        }
        const MethodSummary s = summarize_runs(runs);
        refreshes /= static_cast<double>(f.seeds.size());
        csv << f.param << ',' << tag << ',' << s.runs << ',';
        char nums[160];
        if (s.has_bwt) {
            std::snprintf(nums, sizeof(nums), "%.17g,%.17g,%.17g,%.17g,%.17g", s.mean_acc,
                          s.std_acc, s.mean_bwt, s.std_bwt, refreshes);
        } else {
            std::snprintf(nums, sizeof(nums), "%.17g,%.17g,,,%.17g", s.mean_acc, s.std_acc,
                          refreshes);
        }
        csv << nums << '\n';
        char bwt[32];
        if (s.has_bwt) std::snprintf(bwt, sizeof(bwt), "%.4f", s.mean_bwt);
        else std::snprintf(bwt, sizeof(bwt), "--");
        std::printf("%-14s %8s %10.4f %10s %12.1f\n", f.param.c_str(), tag, s.mean_acc, bwt,
                    refreshes);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["command"] = "sweep";
    manifest["dataset"] = dataset_block(f);
    manifest["method"] = f.method;
    manifest["param"] = f.param;
    manifest["values"] = f.values;
    manifest["seeds"] = f.seeds;
    manifest["outputs"] = {"sweep.csv"};
    manifest["wall_clock_seconds"] = elapsed;
    write_json_file(out / "manifest.json", manifest);
    std::printf("(%zu runs, %.1f s)\n", f.values.size() * f.seeds.size(), elapsed);
    return 0;
}

int cmd_verify(std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CheckResult> results = run_verification_suite(seed);

    // Negative control: a deliberately corrupted distance must be caught.
    const DistanceFn corrupted = [](std::span<const double> a, std::span<const double> b) {
        return wasserstein_cycle_distance(a, b) * 1.001 + 1e-6;
    };
    CheckResult control = check_distance_oracle(seed, 50, corrupted);
    control.name = "negative-control-detects-corruption";
    control.passed = !control.passed;
    control.detail = control.passed ? "corrupted distance implementation was rejected"
                                    : "corrupted distance implementation went unnoticed";
    results.push_back(std::move(control));

    bool ok = true;
    for (const CheckResult& r : results) {
        std::printf("[%s] %-38s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        ok = ok && r.passed;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%zu checks in %.1f s\n", results.size(), elapsed);
    return ok ? 0 : 3;
}

int cmd_gen_data(const Flags& f) {
    const TaskStream stream = build_stream(f, f.seed);
    save_task_stream(stream, f.out);
    std::printf("wrote %zu tasks (%d train / %d test each, %d features, %d classes) to %s\n",
                stream.tasks.size(), stream.tasks.front().train.size(),
                stream.tasks.front().test.size(), stream.feature_dim, stream.num_classes,
                f.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topology-regularized continual learning experiments"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* run = app.add_subcommand("run", "Train one method on one task stream");
    add_data_options(run, f);
    add_trainer_options(run, f);
    run->add_option("--method", f.method, "Training method")->check(CLI::IsMember(kMethods));
    run->add_option("--seed", f.seed, "Run seed");
    run->add_option("--out", f.out, "Output directory");

    CLI::App* compare = app.add_subcommand("compare", "Run several methods over several seeds");
    add_data_options(compare, f);
    add_trainer_options(compare, f);
    compare->add_option("--methods", f.methods, "Comma-separated method list")
        ->delimiter(',')
        ->check(CLI::IsMember(kMethods));
    compare->add_option("--seeds", f.seeds, "Comma-separated seed list")->delimiter(',');
    compare->add_option("--out", f.out, "Output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "Grid over lambda, m, or mem-per-class");
    add_data_options(sweep, f);
    add_trainer_options(sweep, f);
    sweep->add_option("--method", f.method, "Training method")->check(CLI::IsMember(kMethods));
    sweep->add_option("--param", f.param, "Grid parameter")
        ->check(CLI::IsMember({"lambda", "m", "mem-per-class"}));
    sweep->add_option("--values", f.values, "Comma-separated grid values")
        ->delimiter(',')
        ->required();
    sweep->add_option("--seeds", f.seeds, "Comma-separated seed list")->delimiter(',');
    sweep->add_option("--out", f.out, "Output directory");

    CLI::App* verify = app.add_subcommand("verify", "Run the oracle and property self-checks");
    std::uint64_t verify_seed = 20240817ull;
    verify->add_option("--seed", verify_seed, "Seed for the randomized checks");

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a task stream and save it");
    add_data_options(gen, f);
    gen->add_option("--seed", f.seed, "Stream seed");
    gen->add_option("--out", f.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (run->parsed()) return cmd_run(run, f);
        if (compare->parsed()) return cmd_compare(compare, f);
        if (sweep->parsed()) return cmd_sweep(sweep, f);
        if (verify->parsed()) return cmd_verify(verify_seed);
        if (gen->parsed()) return cmd_gen_data(f);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
