#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "topocl/metrics.hpp"

using namespace topocl;

namespace {

AccuracyMatrix two_task_example() {
    AccuracyMatrix r(2);
    r.set(0, 0, 0.9);
    r.set(1, 0, 0.8);
    r.set(1, 1, 0.85);
    return r;
}

AccuracyMatrix three_task_example() {
    AccuracyMatrix r(3);
    r.set(0, 0, 0.9);
    r.set(1, 0, 0.8);
    r.set(1, 1, 0.85);
    r.set(2, 0, 0.75);
    r.set(2, 1, 0.8);
    r.set(2, 2, 0.9);
    return r;
}

}  // namespace

TEST_CASE("final-row average accuracy") {
    // hand arithmetic: (0.8 + 0.85) / 2
    CHECK(compute_acc(two_task_example()) == doctest::Approx(0.825).epsilon(1e-12));

    AccuracyMatrix single(1);
    single.set(0, 0, 0.9);
    CHECK(compute_acc(single) == doctest::Approx(0.9).epsilon(1e-12));

    AccuracyMatrix zero(2);
    zero.set(0, 0, 0.5);
    zero.set(1, 0, 0.0);
    zero.set(1, 1, 0.0);
    CHECK(compute_acc(zero) == 0.0);
}

TEST_CASE("backward transfer against hand arithmetic") {
    // ((0.8 - 0.9)) / 1
    CHECK(compute_bwt(two_task_example()) == doctest::Approx(-0.1).epsilon(1e-12));
    // ((0.75 - 0.9) + (0.8 - 0.85)) / 2
    CHECK(compute_bwt(three_task_example()) == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(compute_acc(three_task_example()) == doctest::Approx(2.45 / 3.0).epsilon(1e-12));
}

TEST_CASE("no forgetting means zero backward transfer") {
    AccuracyMatrix r(3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) r.set(i, j, 0.7);
    }
    CHECK(compute_bwt(r) == 0.0);
}

TEST_CASE("backward transfer is an error for a single task") {
    AccuracyMatrix r(1);
    r.set(0, 0, 0.9);
    CHECK_THROWS_AS(compute_bwt(r), UndefinedForSingleTask);
}

TEST_CASE("metrics reject matrices with holes") {
    AccuracyMatrix r(2);
    r.set(0, 0, 0.9);
    r.set(1, 1, 0.8);  // final row missing R[1][0]
    CHECK_THROWS_AS(compute_acc(r), IncompleteMatrix);
    CHECK_THROWS_AS(compute_bwt(r), IncompleteMatrix);

    AccuracyMatrix no_diag(2);
    no_diag.set(1, 0, 0.8);
    no_diag.set(1, 1, 0.85);  // diagonal missing R[0][0]
    CHECK_NOTHROW(compute_acc(no_diag));
    CHECK_THROWS_AS(compute_bwt(no_diag), IncompleteMatrix);
}

TEST_CASE("matrix cells are validated") {
    AccuracyMatrix r(2);
    CHECK_THROWS_AS(r.set(0, 1, 0.5), IncompleteMatrix);   // above diagonal
    CHECK_THROWS_AS(r.set(2, 0, 0.5), IncompleteMatrix);   // row out of range
    CHECK_THROWS_AS(r.set(1, 0, 1.01), IncompleteMatrix);  // outside [0, 1]
    CHECK_THROWS_AS(r.set(1, 0, -0.2), IncompleteMatrix);
    CHECK(!r.defined(0, 0));
    r.set(0, 0, 1.0);
    CHECK(r.defined(0, 0));
    CHECK(!r.defined(0, 1));
    CHECK_THROWS_AS(r.at(1, 1), IncompleteMatrix);  // never filled
}

TEST_CASE("json reports round-trip every field exactly") {
    ExperimentReport report;
    report.method = "top-ring";
    report.dataset = "synthetic";
    report.seed = 1234567890123456789ull;
    report.r = AccuracyMatrix(3);
    report.r.set(0, 0, 1.0 / 3.0);
    report.r.set(1, 0, 0.123456789012345678);
    report.r.set(1, 1, 0.9999999999999999);
    report.r.set(2, 0, 0.1);
    report.r.set(2, 1, 0.2);
    report.r.set(2, 2, 0.3);
    report.acc = compute_acc(report.r);
    report.bwt = compute_bwt(report.r);
    report.has_bwt = true;
    report.train_loss = {{2.302585, 1.5, 0.75}, {1.25}, {0.5, 0.25}};
    report.decomposition_count = 42;
    // keys pre-sorted: the json object form stores them sorted, so only the
    // sorted order survives the round trip
    report.config_echo = {{"gamma", "0.1"}, {"lambda", "1"}, {"m", "5"}};

    const auto path = (std::filesystem::temp_directory_path() / "topocl_report.json").string();
    write_report(report, path, ReportFormat::json);
    const ExperimentReport back = read_report(path);
    std::remove(path.c_str());

    CHECK(back.method == report.method);
    CHECK(back.dataset == report.dataset);
    CHECK(back.seed == report.seed);
    REQUIRE(back.r.num_tasks() == 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) CHECK(back.r.at(i, j) == report.r.at(i, j));  // bit-exact
    }
    CHECK(back.acc == report.acc);
    CHECK(back.bwt == report.bwt);
    CHECK(back.has_bwt);
    CHECK(back.train_loss == report.train_loss);
    CHECK(back.decomposition_count == 42);
    CHECK(back.config_echo == report.config_echo);
}

TEST_CASE("an omitted backward transfer survives the round trip as null") {
    ExperimentReport report;
    report.method = "multitask";
    report.dataset = "synthetic";
    report.r = AccuracyMatrix(1);
    report.r.set(0, 0, 0.77);
    report.acc = 0.77;
    report.has_bwt = false;

    const auto path = (std::filesystem::temp_directory_path() / "topocl_report_mt.json").string();
    write_report(report, path, ReportFormat::json);
    const ExperimentReport back = read_report(path);
    std::remove(path.c_str());
    CHECK(!back.has_bwt);
    CHECK(back.acc == 0.77);
}

TEST_CASE("csv dump has a header plus one row per task") {
    ExperimentReport report;
    report.r = three_task_example();
    const auto path = (std::filesystem::temp_directory_path() / "topocl_report.csv").string();
    write_report(report, path, ReportFormat::csv);

    std::ifstream in(path);
    std::string line;
    int lines = 0;
    std::string first;
    while (std::getline(in, line)) {
        if (lines == 0) first = line;
        ++lines;
    }
    in.close();
    std::remove(path.c_str());
    CHECK(lines == 4);
    CHECK(first == "after_task,task_1,task_2,task_3");
}

TEST_CASE("summaries use the unbiased standard deviation") {
    ExperimentReport a;
    a.method = "er-ring";
    a.acc = 0.8;
    a.bwt = -0.05;
    a.has_bwt = true;
    ExperimentReport b = a;
    b.acc = 0.9;
    b.bwt = -0.15;

    const MethodSummary s = summarize_runs({a, b});
    CHECK(s.runs == 2);
    CHECK(s.mean_acc == doctest::Approx(0.85).epsilon(1e-12));
    // sqrt(((0.8-0.85)^2 + (0.9-0.85)^2) / 1)
    CHECK(s.std_acc == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
    CHECK(s.mean_bwt == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(s.std_bwt == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));

    const MethodSummary single = summarize_runs({a});
    CHECK(single.std_acc == 0.0);
    CHECK(single.mean_acc == 0.8);

    ExperimentReport other = a;
    other.method = "finetune";
    CHECK_THROWS_AS(summarize_runs({a, other}), IncompleteMatrix);

    ExperimentReport no_bwt = b;
    no_bwt.has_bwt = false;
    const MethodSummary partial = summarize_runs({a, no_bwt});
    CHECK(!partial.has_bwt);
    CHECK(partial.mean_acc == doctest::Approx(0.85).epsilon(1e-12));
}
