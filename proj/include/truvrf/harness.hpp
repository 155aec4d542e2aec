#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "truvrf/adversary.hpp"
#include "truvrf/metrics.hpp"

namespace truvrf {

// -- Scenario configuration ----------------------------------------------------

struct DatasetConfig {
    std::string kind = "synthetic";  // "synthetic" | "idx"
    // synthetic
    int num_classes = 5;
    std::int64_t train_per_class = 500;
    std::vector<std::int64_t> train_counts;  // per-class override; empty = uniform
    std::int64_t test_per_class = 150;
    int dim = 8;
    double separation = 3.0;
    std::uint64_t seed = 1;
    // idx
    std::string images;
    std::string labels;

    std::int64_t train_count_for(int label) const {
        return train_counts.empty() ? train_per_class
                                    : train_counts[static_cast<std::size_t>(label)];
    }
};

struct FrameworkConfig {
    std::string kind = "retrain";  // "retrain" | "sisa" | "amnesiac"
    int k = 5;                     // sisa shard count
    int epochs = 0;                // amnesiac continue-training epochs; 0 = train.epochs
};

struct RequestConfig {
    std::vector<int> classes;          // empty = one random class per trial
    std::vector<std::int64_t> volume;  // empty = whole class; else trial i uses volume[i % size]
};

struct MetricParams {
    // Metric-I flag level for batteries. Small desk-scale models drift far more
    // per class under retraining than production-size ones do, so the scenario
    // default sits well above the 1% library default: honest-retrain bystander
    // classes reach ~1.1 relative change while genuinely unlearned classes stay
    // above ~2.5.
    double threshold = 1.5;
    std::optional<double> tau;          // Metric-III; unset = calibrate per benchmark
    int shadow_count = 5;               // Metric-II n
    int batch_volume = 100;             // Metric-II quantum
    int probe_per_class = 50;           // auxiliary slice size
    double probe_alpha = 0.01;          // probe learning rate
    int probe_passes = 1;
    double lazy_ratio_threshold = 0.75;  // inferred/requested below this = lazy flag
    int calibration_runs = 20;
    std::string volume_probe_source = "test_data";  // or "target_data"
};

struct SweepConfig {
    std::string pointer;              // JSON pointer into the config, e.g. "/request/volume"
    std::vector<std::string> values;  // JSON-encoded values substituted one at a time
};

struct ScenarioConfig {
    DatasetConfig dataset;
    std::vector<int> hidden_layers = {32, 16};
    TrainConfig train;
    FrameworkConfig framework;
    std::vector<ServerBehavior> behaviors;  // trial i runs behaviors[i % size]
    RequestConfig request;
    std::set<std::string> metrics;  // subset of {"class", "volume", "sample"}
    int trials = 1;
    std::uint64_t master_seed = 0;
    MetricParams params;
    std::optional<SweepConfig> sweep;

    void validate() const;
};

/// Desk-scale battery that finishes in minutes on one core: 5 Gaussian classes,
/// 500 train + 150 test samples each, a small ReLU net, 40 trials.
ScenarioConfig default_scenario();

ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);

// -- Results ---------------------------------------------------------------------

struct TrialRecord {
    int trial_index = 0;
    std::uint64_t trial_seed = 0;

    // Ground truth (populated before metrics run; metrics never see it).
    std::string behavior_kind;
    std::vector<int> target_classes;
    std::int64_t requested_volume = 0;
    std::int64_t executed_volume = 0;

    bool skipped = false;
    std::string skip_reason;

    std::optional<ClassVerdict> class_verdict;
    std::vector<VolumeEstimate> volume_estimates;  // one per requested class
    std::optional<SampleVerdict> sample_verdict;

    std::optional<bool> metric1_correct;
    std::optional<double> metric2_deviation;  // mean over requested classes (executed > 0)
    std::optional<bool> metric2_correct;      // nothing-executed trials: inferred must be 0
    std::optional<bool> metric2_lazy_flag;    // inferred/requested < lazy_ratio_threshold
    std::optional<bool> metric3_correct;

    // Wall clock, for operators only — never serialized, so reports stay
    // byte-reproducible.
    double model_ms = 0.0;
    double metrics_ms = 0.0;
};

struct BenchmarkReport {
    std::string config_json;  // normalized scenario echo
    int trials_requested = 0;
    int trials_completed = 0;
    int trials_skipped = 0;
    std::optional<double> tau_used;
    std::optional<double> metric1_accuracy;
    std::optional<double> metric2_mean_deviation;
    std::optional<double> metric2_median_deviation;
    std::optional<double> metric3_accuracy;
    std::vector<TrialRecord> records;
};

bool operator==(const TrialRecord& a, const TrialRecord& b);
bool operator==(const BenchmarkReport& a, const BenchmarkReport& b);

/// One fully seeded trial: data, training, server behavior, unlearning, the
/// selected metrics, and scoring. Self-contained — identical output for
/// identical (cfg, trial_index).
TrialRecord run_trial(const ScenarioConfig& cfg, int trial_index);

/// The whole battery (trials run in parallel under TRUVRF_THREADS, aggregates
/// independent of worker count). Calibrates UM and tau first when needed.
BenchmarkReport run_benchmark(const ScenarioConfig& cfg);

/// Nearest-rank 95th percentile of gap_ratio over `honest_runs` honest trials
/// of cfg's framework. The seed stream is disjoint from benchmark trials.
double calibrate_tau(const ScenarioConfig& cfg, int honest_runs);

/// Nearest-rank 95th percentile: sorted[ceil(0.95 * n)] (1-indexed).
double percentile95_nearest_rank(std::vector<double> values);

std::string report_to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const std::string& text);

/// format: "json" (exact mirror, re-readable) or "csv" (one row per trial plus
/// an aggregate footer).
void emit_report(const BenchmarkReport& report, const std::string& format,
                 const std::filesystem::path& path);

// -- Parameter sweeps -------------------------------------------------------------

struct SweepPoint {
    std::string value;  // JSON-encoded swept value
    BenchmarkReport report;
};

std::vector<SweepPoint> run_sweep(const ScenarioConfig& cfg);

/// Plot data: x = swept value, y = each metric aggregate present.
void emit_plot_csv(const std::string& pointer, const std::vector<SweepPoint>& points,
                   const std::filesystem::path& path);

}  // namespace truvrf
