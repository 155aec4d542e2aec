#include "doctest.h"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "truvrf/harness.hpp"

using namespace truvrf;
namespace fs = std::filesystem;

namespace {

// small fast battery used wherever the assertion is structural, not statistical
ScenarioConfig mini_scenario() {
    ScenarioConfig cfg = default_scenario();
    cfg.dataset.train_per_class = 60;
    cfg.dataset.test_per_class = 30;
    cfg.dataset.num_classes = 3;
    cfg.hidden_layers = {8};
    cfg.train.epochs = 6;
    cfg.train.learning_rate = 0.1;
    cfg.request.volume = {20};
    cfg.metrics = {"class"};
    cfg.trials = 4;
    cfg.master_seed = 5;
    cfg.params.probe_per_class = 10;
    return cfg;
}

int count_lines(const fs::path& path) {
    std::ifstream in(path);
    int n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

}  // namespace

//configuration

TEST_CASE("the default scenario is the documented desk-scale battery") {
    ScenarioConfig cfg = default_scenario();
    CHECK(cfg.dataset.num_classes == 5);
    CHECK(cfg.dataset.train_per_class == 500);
    CHECK(cfg.dataset.test_per_class == 150);
    CHECK(cfg.hidden_layers == std::vector<int>{32, 16});
    CHECK(cfg.train.epochs == 20);
    CHECK(cfg.train.learning_rate == 0.05);
    CHECK(cfg.trials == 40);
    CHECK(cfg.params.probe_per_class == 50);
    CHECK(cfg.params.probe_alpha == 0.01);
    CHECK(cfg.params.probe_passes == 1);
    CHECK(cfg.params.shadow_count == 5);
    CHECK(cfg.params.batch_volume == 100);
    CHECK(cfg.params.calibration_runs == 20);
    CHECK_FALSE(cfg.params.tau.has_value());
    cfg.validate();
}

TEST_CASE("scenario json round-trips to a fixed normal form") {
    ScenarioConfig cfg = mini_scenario();
    std::string once = scenario_to_json(cfg);
    std::string twice = scenario_to_json(scenario_from_json(once));
    CHECK(once == twice);

    ScenarioConfig back = scenario_from_json(once);
    CHECK(back.dataset.train_per_class == 60);
    CHECK(back.metrics == cfg.metrics);
    CHECK(back.request.volume == cfg.request.volume);
}

TEST_CASE("configs parse from sparse json and reject unknown keys") {
    ScenarioConfig cfg = scenario_from_json(R"({"trials": 3, "metrics": ["class"]})");
    CHECK(cfg.trials == 3);
    CHECK(cfg.dataset.train_per_class == 500);  // defaults fill the rest

    CHECK_THROWS_AS(scenario_from_json(R"({"trails": 3})"), invalid_input);
    CHECK_THROWS_AS(scenario_from_json(R"({"dataset": {"dimension": 4}})"), invalid_input);
    CHECK_THROWS_AS(scenario_from_json(R"({"params": {"alpha": 0.1}})"), invalid_input);
    CHECK_THROWS_AS(scenario_from_json("not json at all"), invalid_input);
    CHECK_THROWS_AS(scenario_from_json(R"({"metrics": ["speed"]})"), invalid_input);
    CHECK_THROWS_AS(scenario_from_json(R"({"behavior": {"kind": "sneaky"}})"), invalid_input);
}

TEST_CASE("per-class train counts reshape the universe") {
    ScenarioConfig cfg = mini_scenario();
    cfg.dataset.train_counts = {40, 80, 60};
    cfg.request.classes = {1};
    cfg.request.volume.clear();  // whole class
    cfg.trials = 1;
    cfg.validate();

    TrialRecord rec = run_trial(cfg, 0);
    CHECK(rec.requested_volume == 80);

    cfg.dataset.train_counts = {40, 80};
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg.dataset.train_counts = {40, 80, 0};
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
}

TEST_CASE("validation catches volume and probe overreach") {
    ScenarioConfig cfg = mini_scenario();
    cfg.request.volume = {61};
    CHECK_THROWS_AS(cfg.validate(), invalid_input);

    cfg = mini_scenario();
    cfg.params.probe_per_class = 31;
    CHECK_THROWS_AS(cfg.validate(), invalid_input);

    cfg = mini_scenario();
    cfg.metrics = {"volume"};
    cfg.params.shadow_count = 5;
    cfg.params.batch_volume = 20;  // 100 > 60 per class
    CHECK_THROWS_AS(cfg.validate(), invalid_input);

    cfg = mini_scenario();
    cfg.metrics = {"sample"};
    cfg.request.volume = {5};  // below probe_per_class = 10
    CHECK_THROWS_AS(cfg.validate(), invalid_input);

    cfg = mini_scenario();
    cfg.metrics.clear();
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
}

//trials

TEST_CASE("trials replay bit-identically from their index") {
    ScenarioConfig cfg = mini_scenario();
    TrialRecord a = run_trial(cfg, 2);
    TrialRecord b = run_trial(cfg, 2);
    CHECK(a == b);  // wall-clock fields excluded by design
    TrialRecord c = run_trial(cfg, 3);
    CHECK(a.trial_seed != c.trial_seed);
    CHECK(a.trial_index == 2);
}

TEST_CASE("a neglecting server is always caught by the class metric") {
    ScenarioConfig cfg = mini_scenario();
    cfg.behaviors = {ServerBehavior{ServerKind::Neglecting, 0.0, 0}};
    TrialRecord rec = run_trial(cfg, 0);
    REQUIRE(rec.class_verdict.has_value());
    for (const auto& [label, entry] : rec.class_verdict->per_class)
        CHECK(entry.relative_change == 0.0);
    CHECK(rec.executed_volume == 0);
    REQUIRE(rec.metric1_correct.has_value());
    CHECK(*rec.metric1_correct);
}

TEST_CASE("an honest desk trial flags exactly the requested class") {
    ScenarioConfig cfg = default_scenario();
    cfg.metrics = {"class"};
    cfg.trials = 1;
    cfg.master_seed = 7;
    cfg.request.volume.clear();  // full class
    TrialRecord rec = run_trial(cfg, 0);
    REQUIRE(rec.class_verdict.has_value());
    CHECK(rec.class_verdict->flagged_classes() == rec.target_classes);
    REQUIRE(rec.metric1_correct.has_value());
    CHECK(*rec.metric1_correct);
}

//batteries

TEST_CASE("single-trial batteries aggregate to that trial's scores") {
    ScenarioConfig cfg = mini_scenario();
    cfg.trials = 1;
    BenchmarkReport report = run_benchmark(cfg);
    CHECK(report.trials_requested == 1);
    CHECK(report.trials_completed == 1);
    CHECK(report.trials_skipped == 0);
    REQUIRE(report.metric1_accuracy.has_value());
    REQUIRE(report.records.size() == 1);
    CHECK(*report.metric1_accuracy == (*report.records[0].metric1_correct ? 1.0 : 0.0));
}

TEST_CASE("reports are byte-identical across worker counts") {
    ScenarioConfig cfg = mini_scenario();
    setenv("TRUVRF_THREADS", "1", 1);
    std::string serial = report_to_json(run_benchmark(cfg));
    setenv("TRUVRF_THREADS", "4", 1);
    std::string threaded = report_to_json(run_benchmark(cfg));
    unsetenv("TRUVRF_THREADS");
    CHECK(serial == threaded);
}

TEST_CASE("infeasible trials are skipped and accounted for") {
    ScenarioConfig cfg = mini_scenario();
    cfg.request.volume = {40};  // deceiving needs 40 spares out of 60
    ServerBehavior honest;
    ServerBehavior deceiving;
    deceiving.kind = ServerKind::Deceiving;
    deceiving.seed = 3;
    cfg.behaviors = {honest, deceiving};
    cfg.trials = 4;

    BenchmarkReport report = run_benchmark(cfg);
    CHECK(report.trials_requested == 4);
    CHECK(report.trials_skipped == 2);
    CHECK(report.trials_completed == 2);
    for (const auto& rec : report.records)
        if (rec.skipped) {
            CHECK(rec.behavior_kind == "deceiving");
            CHECK_FALSE(rec.skip_reason.empty());
        }

    cfg.behaviors = {deceiving};
    CHECK_THROWS_AS(run_benchmark(cfg), infeasible_error);
}

TEST_CASE("tau is calibrated once and reused by the battery") {
    ScenarioConfig cfg = mini_scenario();
    cfg.metrics = {"sample"};
    cfg.request.volume = {20};
    cfg.params.probe_per_class = 10;
    cfg.params.calibration_runs = 10;
    cfg.trials = 2;

    double tau = calibrate_tau(cfg, cfg.params.calibration_runs);
    CHECK(tau == calibrate_tau(cfg, cfg.params.calibration_runs));
    BenchmarkReport report = run_benchmark(cfg);
    REQUIRE(report.tau_used.has_value());
    CHECK(*report.tau_used == tau);
    for (const auto& rec : report.records)
        if (rec.sample_verdict) CHECK(rec.sample_verdict->tau == tau);

    cfg.params.tau = 0.42;  // pinned tau skips calibration
    BenchmarkReport pinned = run_benchmark(cfg);
    REQUIRE(pinned.tau_used.has_value());
    CHECK(*pinned.tau_used == 0.42);

    CHECK_THROWS_AS(calibrate_tau(cfg, 5), invalid_input);
}

//reports

TEST_CASE("reports survive the json round-trip") {
    ScenarioConfig cfg = mini_scenario();
    BenchmarkReport report = run_benchmark(cfg);
    BenchmarkReport back = report_from_json(report_to_json(report));
    CHECK(back == report);
    CHECK(report_to_json(back) == report_to_json(report));
    CHECK_THROWS_AS(report_from_json("{{"), format_error);
}

TEST_CASE("csv reports carry one row per trial plus a footer") {
    ScenarioConfig cfg = mini_scenario();
    BenchmarkReport report = run_benchmark(cfg);
    auto path = fs::temp_directory_path() / "truvrf_test_report.csv";
    emit_report(report, "csv", path);
    {
        std::ifstream in(path);
        std::string line;
        int data_rows = 0, footer_rows = 0;
        REQUIRE(std::getline(in, line));
        CHECK(line.rfind("trial_index,", 0) == 0);  // header
        while (std::getline(in, line)) {
            if (line.rfind("# aggregate,", 0) == 0)
                ++footer_rows;
            else
                ++data_rows;
        }
        CHECK(data_rows == 4);  // one per trial
        CHECK(footer_rows >= 3);
    }
    fs::remove(path);

    emit_report(report, "json", path);
    CHECK(report_from_json([&] {
              std::ifstream in(path);
              std::stringstream ss;
              ss << in.rdbuf();
              return ss.str();
          }()) == report);
    fs::remove(path);
    CHECK_THROWS_AS(emit_report(report, "xml", path), invalid_input);
}

//sweeps

TEST_CASE("sweeps rerun the battery at each substituted value") {
    ScenarioConfig cfg = mini_scenario();
    cfg.trials = 2;
    SweepConfig sweep;
    sweep.pointer = "/train/epochs";
    sweep.values = {"2", "4"};
    cfg.sweep = sweep;

    auto points = run_sweep(cfg);
    REQUIRE(points.size() == 2);
    CHECK(points[0].value == "2");
    CHECK(points[1].value == "4");
    for (const auto& p : points) CHECK(p.report.trials_completed == 2);
    CHECK(points[0].report.records[0].trial_seed == points[1].report.records[0].trial_seed);

    auto path = fs::temp_directory_path() / "truvrf_test_sweep.csv";
    emit_plot_csv(sweep.pointer, points, path);
    CHECK(count_lines(path) == 3);  // header + one row per point
    fs::remove(path);

    cfg.sweep->pointer = "/nonexistent/key";
    CHECK_THROWS_AS(run_sweep(cfg), invalid_input);
}
