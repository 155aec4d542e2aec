#include "truvrf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "truvrf/unlearning.hpp"

namespace truvrf {

using ordered_json = nlohmann::ordered_json;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

// -- Config ---------------------------------------------------------------------

void ScenarioConfig::validate() const {
    if (trials < 1) throw invalid_input("trials must be >= 1");
    if (dataset.kind != "synthetic" && dataset.kind != "idx")
        throw invalid_input("dataset.kind must be 'synthetic' or 'idx'");
    if (dataset.kind == "synthetic") {
        if (dataset.num_classes < 2) throw invalid_input("dataset.num_classes must be >= 2");
        if (dataset.train_per_class < 1 || dataset.test_per_class < 1)
            throw invalid_input("dataset per-class counts must be >= 1");
        if (!dataset.train_counts.empty()) {
            if (dataset.train_counts.size() != static_cast<std::size_t>(dataset.num_classes))
                throw invalid_input("dataset.train_counts needs one entry per class");
            for (std::int64_t n : dataset.train_counts)
                if (n < 1) throw invalid_input("dataset.train_counts entries must be >= 1");
        }
        if (dataset.dim < 1) throw invalid_input("dataset.dim must be >= 1");
        if (!(dataset.separation > 0.0)) throw invalid_input("dataset.separation must be > 0");
    } else {
        if (dataset.images.empty() || dataset.labels.empty())
            throw invalid_input("idx dataset needs images and labels paths");
        if (dataset.test_per_class < 1)
            throw invalid_input("dataset.test_per_class must be >= 1");
    }
    for (int h : hidden_layers)
        if (h < 1) throw invalid_input("hidden layer widths must be >= 1");
    train.validate();
    if (framework.kind != "retrain" && framework.kind != "sisa" && framework.kind != "amnesiac")
        throw invalid_input("framework.kind must be retrain, sisa, or amnesiac");
    if (framework.kind == "sisa" && framework.k < 1)
        throw invalid_input("framework.k must be >= 1");
    if (framework.epochs < 0) throw invalid_input("framework.epochs must be >= 0");
    if (behaviors.empty()) throw invalid_input("at least one server behavior is required");
    for (const ServerBehavior& b : behaviors) b.validate();
    for (const std::string& m : metrics)
        if (m != "class" && m != "volume" && m != "sample")
            throw invalid_input("unknown metric '" + m + "'");
    if (metrics.empty()) throw invalid_input("select at least one metric");

    for (int c : request.classes)
        if (c < 0 || (dataset.kind == "synthetic" && c >= dataset.num_classes))
            throw invalid_input("requested class " + std::to_string(c) + " out of range");
    // Classes a request can land on: the listed ones, or any when drawn at random.
    std::vector<int> candidates = request.classes;
    if (candidates.empty() && dataset.kind == "synthetic")
        for (int c = 0; c < dataset.num_classes; ++c) candidates.push_back(c);
    std::int64_t min_candidate = std::numeric_limits<std::int64_t>::max();
    for (int c : candidates) min_candidate = std::min(min_candidate, dataset.train_count_for(c));
    for (std::int64_t v : request.volume) {
        if (v < 1) throw invalid_input("request volumes must be >= 1");
        if (dataset.kind == "synthetic" && v > min_candidate)
            throw invalid_input("request volume " + std::to_string(v) +
                                " exceeds a candidate class's train count");
    }

    const MetricParams& p = params;
    if (p.threshold < 0.0) throw invalid_input("params.threshold must be >= 0");
    if (p.shadow_count < 2) throw invalid_input("params.shadow_count must be >= 2");
    if (p.batch_volume < 1) throw invalid_input("params.batch_volume must be >= 1");
    if (p.probe_per_class < 1) throw invalid_input("params.probe_per_class must be >= 1");
    if (!(p.probe_alpha > 0.0)) throw invalid_input("params.probe_alpha must be > 0");
    if (p.probe_passes < 1) throw invalid_input("params.probe_passes must be >= 1");
    if (!(p.lazy_ratio_threshold > 0.0 && p.lazy_ratio_threshold <= 1.0))
        throw invalid_input("params.lazy_ratio_threshold must be in (0, 1]");
    if (p.calibration_runs < 10) throw invalid_input("params.calibration_runs must be >= 10");
    if (p.volume_probe_source != "test_data" && p.volume_probe_source != "target_data")
        throw invalid_input("params.volume_probe_source must be test_data or target_data");

    if (dataset.kind == "synthetic") {
        if (p.probe_per_class > dataset.test_per_class)
            throw invalid_input("probe_per_class exceeds test_per_class");
        if (metrics.count("volume") &&
            static_cast<std::int64_t>(p.shadow_count) * p.batch_volume > min_candidate)
            throw invalid_input(
                "shadow sweep needs shadow_count*batch_volume <= the candidate class train "
                "count");
        if (metrics.count("sample")) {
            std::int64_t min_vol = min_candidate;
            for (std::int64_t v : request.volume) min_vol = std::min(min_vol, v);
            if (min_vol < p.probe_per_class)
                throw invalid_input("sample metric needs request volume >= probe_per_class");
        }
    }
    if (sweep && sweep->values.empty()) throw invalid_input("sweep.values must be nonempty");
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.train.learning_rate = 0.05;
    cfg.train.epochs = 20;
    cfg.train.batch_size = 32;
    cfg.behaviors = {ServerBehavior{}};
    cfg.metrics = {"class"};
    cfg.trials = 40;
    cfg.master_seed = 7;
    return cfg;
}

namespace {

ordered_json behavior_to_json(const ServerBehavior& b) {
    ordered_json j;
    j["kind"] = to_string(b.kind);
    if (b.kind == ServerKind::Lazy) j["keep_fraction"] = b.keep_fraction;
    j["seed"] = b.seed;
    return j;
}

ServerBehavior behavior_from_json(const ordered_json& j) {
    ServerBehavior b;
    b.kind = server_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("keep_fraction")) b.keep_fraction = j.at("keep_fraction").get<double>();
    if (j.contains("seed")) b.seed = j.at("seed").get<std::uint64_t>();
    b.validate();
    return b;
}

void reject_unknown_keys(const ordered_json& j, const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw invalid_input("unknown key '" + key + "' in " + where);
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw invalid_input(std::string("config is not valid JSON: ") + e.what());
    }
    ScenarioConfig cfg = default_scenario();
    try {
        reject_unknown_keys(j,
                            {"dataset", "model", "train", "framework", "behavior", "request",
                             "metrics", "trials", "master_seed", "params", "sweep"},
                            "config");
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            reject_unknown_keys(d,
                                {"kind", "num_classes", "train_per_class", "train_counts",
                                 "test_per_class", "dim", "separation", "seed", "images",
                                 "labels"},
                                "dataset");
            if (d.contains("kind")) cfg.dataset.kind = d.at("kind").get<std::string>();
            if (d.contains("num_classes")) cfg.dataset.num_classes = d.at("num_classes").get<int>();
            if (d.contains("train_per_class"))
                cfg.dataset.train_per_class = d.at("train_per_class").get<std::int64_t>();
            if (d.contains("train_counts"))
                cfg.dataset.train_counts =
                    d.at("train_counts").get<std::vector<std::int64_t>>();
            if (d.contains("test_per_class"))
                cfg.dataset.test_per_class = d.at("test_per_class").get<std::int64_t>();
            if (d.contains("dim")) cfg.dataset.dim = d.at("dim").get<int>();
            if (d.contains("separation")) cfg.dataset.separation = d.at("separation").get<double>();
            if (d.contains("seed")) cfg.dataset.seed = d.at("seed").get<std::uint64_t>();
            if (d.contains("images")) cfg.dataset.images = d.at("images").get<std::string>();
            if (d.contains("labels")) cfg.dataset.labels = d.at("labels").get<std::string>();
        }
        if (j.contains("model")) {
            reject_unknown_keys(j.at("model"), {"hidden_layers"}, "model");
            if (j.at("model").contains("hidden_layers"))
                cfg.hidden_layers = j.at("model").at("hidden_layers").get<std::vector<int>>();
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown_keys(t, {"learning_rate", "epochs", "batch_size"}, "train");
            if (t.contains("learning_rate"))
                cfg.train.learning_rate = t.at("learning_rate").get<double>();
            if (t.contains("epochs")) cfg.train.epochs = t.at("epochs").get<int>();
            if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<int>();
        }
        if (j.contains("framework")) {
            const auto& f = j.at("framework");
            reject_unknown_keys(f, {"kind", "k", "epochs"}, "framework");
            if (f.contains("kind")) cfg.framework.kind = f.at("kind").get<std::string>();
            if (f.contains("k")) cfg.framework.k = f.at("k").get<int>();
            if (f.contains("epochs")) cfg.framework.epochs = f.at("epochs").get<int>();
        }
        if (j.contains("behavior")) {
            cfg.behaviors.clear();
            const auto& b = j.at("behavior");
            if (b.is_array())
                for (const auto& entry : b) cfg.behaviors.push_back(behavior_from_json(entry));
            else
                cfg.behaviors.push_back(behavior_from_json(b));
        }
        if (j.contains("request")) {
            const auto& r = j.at("request");
            reject_unknown_keys(r, {"classes", "volume"}, "request");
            if (r.contains("classes")) {
                if (r.at("classes").is_string()) {
                    if (r.at("classes").get<std::string>() != "random")
                        throw invalid_input("request.classes must be 'random' or a class list");
                    cfg.request.classes.clear();
                } else {
                    cfg.request.classes = r.at("classes").get<std::vector<int>>();
                }
            }
            if (r.contains("volume")) {
                if (r.at("volume").is_string()) {
                    if (r.at("volume").get<std::string>() != "all")
                        throw invalid_input("request.volume must be 'all', a count, or a list");
                    cfg.request.volume.clear();
                } else if (r.at("volume").is_array()) {
                    cfg.request.volume = r.at("volume").get<std::vector<std::int64_t>>();
                } else {
                    cfg.request.volume = {r.at("volume").get<std::int64_t>()};
                }
            }
        }
        if (j.contains("metrics")) {
            cfg.metrics.clear();
            for (const auto& m : j.at("metrics")) cfg.metrics.insert(m.get<std::string>());
        }
        if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
        if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("params")) {
            const auto& p = j.at("params");
            reject_unknown_keys(p,
                                {"threshold", "tau", "shadow_count", "batch_volume",
                                 "probe_per_class", "probe_alpha", "probe_passes",
                                 "lazy_ratio_threshold", "calibration_runs",
                                 "volume_probe_source"},
                                "params");
            if (p.contains("threshold")) cfg.params.threshold = p.at("threshold").get<double>();
            if (p.contains("tau")) {
                if (p.at("tau").is_null())
                    cfg.params.tau.reset();
                else
                    cfg.params.tau = p.at("tau").get<double>();
            }
            if (p.contains("shadow_count"))
                cfg.params.shadow_count = p.at("shadow_count").get<int>();
            if (p.contains("batch_volume"))
                cfg.params.batch_volume = p.at("batch_volume").get<int>();
            if (p.contains("probe_per_class"))
                cfg.params.probe_per_class = p.at("probe_per_class").get<int>();
            if (p.contains("probe_alpha")) cfg.params.probe_alpha = p.at("probe_alpha").get<double>();
            if (p.contains("probe_passes")) cfg.params.probe_passes = p.at("probe_passes").get<int>();
            if (p.contains("lazy_ratio_threshold"))
                cfg.params.lazy_ratio_threshold = p.at("lazy_ratio_threshold").get<double>();
            if (p.contains("calibration_runs"))
                cfg.params.calibration_runs = p.at("calibration_runs").get<int>();
            if (p.contains("volume_probe_source"))
                cfg.params.volume_probe_source = p.at("volume_probe_source").get<std::string>();
        }
        if (j.contains("sweep") && !j.at("sweep").is_null()) {
            const auto& s = j.at("sweep");
            reject_unknown_keys(s, {"pointer", "values"}, "sweep");
            SweepConfig sw;
            sw.pointer = s.at("pointer").get<std::string>();
            for (const auto& v : s.at("values")) sw.values.push_back(v.dump());
            cfg.sweep = sw;
        }
    } catch (const ordered_json::exception& e) {
        throw invalid_input(std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
    ordered_json j;
    ordered_json d;
    d["kind"] = cfg.dataset.kind;
    if (cfg.dataset.kind == "synthetic") {
        d["num_classes"] = cfg.dataset.num_classes;
        d["train_per_class"] = cfg.dataset.train_per_class;
        if (!cfg.dataset.train_counts.empty()) d["train_counts"] = cfg.dataset.train_counts;
        d["test_per_class"] = cfg.dataset.test_per_class;
        d["dim"] = cfg.dataset.dim;
        d["separation"] = cfg.dataset.separation;
        d["seed"] = cfg.dataset.seed;
    } else {
        d["images"] = cfg.dataset.images;
        d["labels"] = cfg.dataset.labels;
        d["test_per_class"] = cfg.dataset.test_per_class;
    }
    j["dataset"] = std::move(d);
    j["model"] = {{"hidden_layers", cfg.hidden_layers}};
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size}};
    ordered_json f;
    f["kind"] = cfg.framework.kind;
    if (cfg.framework.kind == "sisa") f["k"] = cfg.framework.k;
    if (cfg.framework.kind == "amnesiac" && cfg.framework.epochs > 0)
        f["epochs"] = cfg.framework.epochs;
    j["framework"] = std::move(f);
    if (cfg.behaviors.size() == 1) {
        j["behavior"] = behavior_to_json(cfg.behaviors.front());
    } else {
        ordered_json arr = ordered_json::array();
        for (const ServerBehavior& b : cfg.behaviors) arr.push_back(behavior_to_json(b));
        j["behavior"] = std::move(arr);
    }
    ordered_json r;
    if (cfg.request.classes.empty())
        r["classes"] = "random";
    else
        r["classes"] = cfg.request.classes;
    if (cfg.request.volume.empty())
        r["volume"] = "all";
    else if (cfg.request.volume.size() == 1)
        r["volume"] = cfg.request.volume.front();
    else
        r["volume"] = cfg.request.volume;
    j["request"] = std::move(r);
    j["metrics"] = cfg.metrics;
    j["trials"] = cfg.trials;
    j["master_seed"] = cfg.master_seed;
    ordered_json p;
    p["threshold"] = cfg.params.threshold;
    p["tau"] = cfg.params.tau ? ordered_json(*cfg.params.tau) : ordered_json(nullptr);
    p["shadow_count"] = cfg.params.shadow_count;
    p["batch_volume"] = cfg.params.batch_volume;
    p["probe_per_class"] = cfg.params.probe_per_class;
    p["probe_alpha"] = cfg.params.probe_alpha;
    p["probe_passes"] = cfg.params.probe_passes;
    p["lazy_ratio_threshold"] = cfg.params.lazy_ratio_threshold;
    p["calibration_runs"] = cfg.params.calibration_runs;
    p["volume_probe_source"] = cfg.params.volume_probe_source;
    j["params"] = std::move(p);
    if (cfg.sweep) {
        ordered_json s;
        s["pointer"] = cfg.sweep->pointer;
        ordered_json vals = ordered_json::array();
        for (const std::string& v : cfg.sweep->values) vals.push_back(ordered_json::parse(v));
        s["values"] = std::move(vals);
        j["sweep"] = std::move(s);
    }
    return j.dump(2);
}

double percentile95_nearest_rank(std::vector<double> values) {
    if (values.empty()) throw invalid_input("no calibration samples");
    std::sort(values.begin(), values.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    return values[rank - 1];
}

// -- Benchmark context ------------------------------------------------------------

namespace {

struct BenchContext {
    ScenarioConfig cfg;
    LabeledDataset train_data;
    LabeledDataset test_data;
    ModelSpec spec;
    AuxiliaryData test_aux;                           // every class, TestData source
    std::map<int, UnlearningMeasurement> um_by_class;  // volume metric only
    std::optional<double> tau;                         // sample metric only
};

std::vector<int> candidate_classes(const BenchContext& ctx) {
    if (!ctx.cfg.request.classes.empty()) return ctx.cfg.request.classes;
    std::vector<int> all;
    for (const auto& [label, ids] : ctx.train_data.class_index()) all.push_back(label);
    return all;
}

AuxiliaryData restrict_aux(const AuxiliaryData& aux, const std::vector<int>& classes) {
    AuxiliaryData out;
    out.source = aux.source;
    out.per_class_count = aux.per_class_count;
    for (int c : classes) {
        auto it = aux.slices.find(c);
        if (it == aux.slices.end())
            throw invalid_input("probes lack class " + std::to_string(c));
        out.slices.emplace(c, it->second);
    }
    return out;
}

TrainConfig trial_train_cfg(const ScenarioConfig& cfg, std::uint64_t seed) {
    TrainConfig t = cfg.train;
    t.shuffle_seed = mix_seed(seed, tag_seed("shuffle"));
    return t;
}

/// data + per-shadow seed -> model, mirroring the scenario framework.
ShadowTrainer shadow_trainer_for(const ScenarioConfig& cfg, const ModelSpec& spec) {
    if (cfg.framework.kind == "sisa") {
        int k = cfg.framework.k;
        TrainConfig base = cfg.train;
        return [spec, base, k](const LabeledDataset& data, std::uint64_t s) -> AnyModel {
            return sisa_train(data, k, spec, base, s);
        };
    }
    TrainConfig base = cfg.train;
    return [spec, base](const LabeledDataset& data, std::uint64_t s) -> AnyModel {
        TrainConfig shadow_cfg = base;
        shadow_cfg.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
        return train(init_model(spec, mix_seed(s, tag_seed("init"))), data, shadow_cfg);
    };
}

double gap_ratio_of_honest_run(const BenchContext& ctx, std::uint64_t seed, int rotation_index);

BenchContext make_context(const ScenarioConfig& cfg, bool with_calibrations) {
    cfg.validate();
    BenchContext ctx;
    ctx.cfg = cfg;

    LabeledDataset universe;
    if (cfg.dataset.kind == "synthetic") {
        std::vector<std::int64_t> per_class;
        for (int c = 0; c < cfg.dataset.num_classes; ++c)
            per_class.push_back(cfg.dataset.train_count_for(c) + cfg.dataset.test_per_class);
        universe = gen_synthetic(cfg.dataset.num_classes, per_class, cfg.dataset.dim,
                                 cfg.dataset.separation,
                                 mix_seed(cfg.master_seed, tag_seed("dataset"),
                                          cfg.dataset.seed));
    } else {
        universe = load_idx(cfg.dataset.images, cfg.dataset.labels);
    }

    std::map<int, std::int64_t> train_counts;
    for (const auto& [label, ids] : universe.class_index()) {
        std::int64_t n = static_cast<std::int64_t>(ids.size()) - cfg.dataset.test_per_class;
        if (n < 1)
            throw invalid_input("class " + std::to_string(label) +
                                " too small for the configured test split");
        train_counts[label] = n;
    }
    std::tie(ctx.train_data, ctx.test_data) = split_per_class(universe, train_counts);

    ctx.spec.input_dim = ctx.train_data.feature_dim();
    ctx.spec.hidden_layers = cfg.hidden_layers;
    ctx.spec.num_classes = ctx.train_data.num_classes();
    ctx.spec.validate();

    ctx.test_aux = make_auxiliary(ctx.test_data, cfg.params.probe_per_class, AuxSource::TestData,
                                  mix_seed(cfg.master_seed, tag_seed("test-aux")));

    if (!with_calibrations) return ctx;

    if (cfg.metrics.count("volume")) {
        ShadowTrainer trainer = shadow_trainer_for(cfg, ctx.spec);
        for (int c : candidate_classes(ctx)) {
            const auto& ids = ctx.train_data.ids_of_class(c);
            if (ids.empty()) throw invalid_input("class " + std::to_string(c) + " has no data");
            LabeledDataset target = ctx.train_data.subset(ids);
            std::vector<std::int64_t> other_ids;
            for (const Sample& s : ctx.train_data.samples())
                if (s.label != c) other_ids.push_back(s.id);
            LabeledDataset others = ctx.train_data.subset(other_ids);
            ctx.um_by_class.emplace(
                c, build_unlearning_measurement(
                       target, others, cfg.params.shadow_count, cfg.params.batch_volume,
                       ctx.test_aux, cfg.params.probe_alpha,
                       mix_seed(cfg.master_seed, tag_seed("um"), static_cast<std::uint64_t>(c)),
                       cfg.params.probe_passes, trainer));
        }
    }

    if (cfg.metrics.count("sample")) {
        if (cfg.params.tau) {
            ctx.tau = *cfg.params.tau;
        } else {
            std::vector<double> gaps(static_cast<std::size_t>(cfg.params.calibration_runs), 0.0);
            parallel_for(cfg.params.calibration_runs, resolve_worker_count(), [&](int i) {
                gaps[i] = gap_ratio_of_honest_run(
                    ctx, mix_seed(cfg.master_seed, tag_seed("calibration"),
                                  static_cast<std::uint64_t>(i)),
                    i);
            });
            ctx.tau = percentile95_nearest_rank(gaps);
        }
    }
    return ctx;
}

// -- One scenario execution --------------------------------------------------------

struct TrialExecution {
    ServerBehavior behavior;
    std::vector<int> target_classes;
    UnlearnRequest requested;
    UnlearnRequest executed;
    AnyModel model_o;
    AnyModel model_u;
    bool skipped = false;
    std::string skip_reason;
};

TrialExecution execute_once(const BenchContext& ctx, std::uint64_t seed, int rotation_index) {
    const ScenarioConfig& cfg = ctx.cfg;
    TrialExecution ex;
    ex.behavior = cfg.behaviors[rotation_index % cfg.behaviors.size()];
    ex.behavior.seed = mix_seed(seed, tag_seed("behavior"), ex.behavior.seed);

    if (cfg.request.classes.empty()) {
        std::vector<int> all;
        for (const auto& [label, ids] : ctx.train_data.class_index()) all.push_back(label);
        Rng pick(mix_seed(seed, tag_seed("pick-class")));
        ex.target_classes = {all[pick.below(all.size())]};
    } else {
        ex.target_classes = cfg.request.classes;
    }

    if (cfg.request.volume.empty()) {
        for (int c : ex.target_classes) {
            UnlearnRequest full = request_full_class(ctx.train_data, c);
            ex.requested.ids_by_class.merge(full.ids_by_class);
        }
    } else {
        std::int64_t v = cfg.request.volume[rotation_index % cfg.request.volume.size()];
        ex.requested = request_random(ctx.train_data, ex.target_classes, v,
                                      mix_seed(seed, tag_seed("request")));
    }

    try {
        ex.executed = apply_behavior(ex.requested, ex.behavior, ctx.train_data);

        std::uint64_t model_seed = mix_seed(seed, tag_seed("model"));
        TrainConfig cfg_t = trial_train_cfg(cfg, seed);
        if (ex.executed.empty()) {
            // Nothing actually forgotten: the server hands back its original model.
            if (cfg.framework.kind == "sisa") {
                ex.model_o = sisa_train(ctx.train_data, cfg.framework.k, ctx.spec, cfg_t,
                                        model_seed);
            } else {
                ex.model_o = train(init_model(ctx.spec, model_seed), ctx.train_data, cfg_t);
            }
            ex.model_u = ex.model_o;
        } else if (cfg.framework.kind == "retrain") {
            UnlearnOutcome out =
                retrain_unlearn(ctx.train_data, ex.executed, ctx.spec, cfg_t, model_seed);
            ex.model_o = std::move(out.model_o);
            ex.model_u = std::move(out.model_u);
        } else if (cfg.framework.kind == "sisa") {
            SisaEnsemble ens =
                sisa_train(ctx.train_data, cfg.framework.k, ctx.spec, cfg_t, model_seed);
            ex.model_u = sisa_unlearn(ens, ex.executed);
            ex.model_o = std::move(ens);
        } else {  // amnesiac
            Model origin = train(init_model(ctx.spec, model_seed), ctx.train_data, cfg_t);
            TrainConfig cfg_a = cfg_t;
            if (cfg.framework.epochs > 0) cfg_a.epochs = cfg.framework.epochs;
            cfg_a.shuffle_seed = mix_seed(seed, tag_seed("amnesiac-shuffle"));
            UnlearnOutcome out = amnesiac_unlearn(origin, ctx.train_data, ex.executed, cfg_a,
                                                  mix_seed(seed, tag_seed("relabel")));
            ex.model_o = std::move(origin);
            ex.model_u = std::move(out.model_u);
        }
    } catch (const infeasible_error& e) {
        ex.skipped = true;
        ex.skip_reason = e.what();
    }
    return ex;
}

double gap_ratio_of_honest_run(const BenchContext& ctx, std::uint64_t seed, int rotation_index) {
    BenchContext honest_ctx = ctx;  // shares data; behavior overridden below
    honest_ctx.cfg.behaviors = {ServerBehavior{}};
    TrialExecution ex = execute_once(honest_ctx, seed, rotation_index);
    if (ex.skipped)
        throw calibration_error("honest calibration run failed: " + ex.skip_reason);
    AuxiliaryData target_aux =
        make_target_auxiliary(ctx.train_data, ex.requested, ctx.cfg.params.probe_per_class,
                              mix_seed(seed, tag_seed("target-aux")));
    AuxiliaryData test_aux = restrict_aux(ctx.test_aux, ex.target_classes);
    SampleVerdict v = verify_sample(ex.model_u, target_aux, test_aux, ctx.cfg.params.probe_alpha,
                                    0.0, ctx.cfg.params.probe_passes);
    return v.gap_ratio;
}

// -- Trial: metrics + scoring -------------------------------------------------------

TrialRecord run_trial_in_context(const BenchContext& ctx, int trial_index) {
    const ScenarioConfig& cfg = ctx.cfg;
    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.trial_seed = mix_seed(cfg.master_seed, tag_seed("trial"),
                              static_cast<std::uint64_t>(trial_index));

    double t0 = now_ms();
    TrialExecution ex = execute_once(ctx, rec.trial_seed, trial_index);
    rec.model_ms = now_ms() - t0;

    rec.behavior_kind = to_string(ex.behavior.kind);
    rec.target_classes = ex.target_classes;
    rec.requested_volume = static_cast<std::int64_t>(ex.requested.total_volume());
    rec.executed_volume = static_cast<std::int64_t>(ex.executed.total_volume());
    if (ex.skipped) {
        rec.skipped = true;
        rec.skip_reason = ex.skip_reason;
        return rec;
    }

    // Ground truth stays on `rec`; the verifier below sees only models, probes
    // and calibration.
    double t1 = now_ms();
    if (cfg.metrics.count("class"))
        rec.class_verdict = verify_class(ex.model_o, ex.model_u, ctx.test_aux,
                                         cfg.params.probe_alpha, cfg.params.threshold,
                                         cfg.params.probe_passes);
    if (cfg.metrics.count("volume")) {
        std::optional<AuxiliaryData> target_probes;
        if (cfg.params.volume_probe_source == "target_data")
            target_probes = make_target_auxiliary(ctx.train_data, ex.requested,
                                                  cfg.params.probe_per_class,
                                                  mix_seed(rec.trial_seed,
                                                           tag_seed("target-aux")));
        for (int c : ex.target_classes) {
            const AuxiliaryData& probes = target_probes ? *target_probes : ctx.test_aux;
            rec.volume_estimates.push_back(verify_volume(ex.model_o, ex.model_u,
                                                         ctx.um_by_class.at(c), probes,
                                                         cfg.params.probe_alpha,
                                                         cfg.params.probe_passes));
        }
    }
    if (cfg.metrics.count("sample")) {
        AuxiliaryData target_aux =
            make_target_auxiliary(ctx.train_data, ex.requested, cfg.params.probe_per_class,
                                  mix_seed(rec.trial_seed, tag_seed("target-aux")));
        AuxiliaryData test_aux = restrict_aux(ctx.test_aux, ex.target_classes);
        rec.sample_verdict = verify_sample(ex.model_u, target_aux, test_aux,
                                           cfg.params.probe_alpha, ctx.tau.value(),
                                           cfg.params.probe_passes);
    }
    rec.metrics_ms = now_ms() - t1;

    // Scoring (the only place ground truth is consulted).
    if (rec.class_verdict) {
        std::vector<int> truly;
        for (const auto& [label, ids] : ex.executed.ids_by_class)
            if (!ids.empty()) truly.push_back(label);
        rec.metric1_correct = (rec.class_verdict->flagged_classes() == truly);
    }
    if (!rec.volume_estimates.empty()) {
        double dev_sum = 0.0;
        int dev_count = 0;
        std::int64_t inferred_total = 0;
        bool all_zero_correct = true;
        for (VolumeEstimate& est : rec.volume_estimates) {
            std::int64_t true_c = static_cast<std::int64_t>(ex.executed.volume(est.target_class));
            inferred_total += est.inferred_volume;
            if (true_c > 0) {
                est.deviation = deviation(true_c, est.inferred_volume);
                dev_sum += est.deviation;
                ++dev_count;
            } else if (est.inferred_volume != 0) {
                all_zero_correct = false;
            }
        }
        if (dev_count > 0)
            rec.metric2_deviation = dev_sum / dev_count;
        else
            rec.metric2_correct = all_zero_correct;
        if (rec.requested_volume > 0)
            rec.metric2_lazy_flag = static_cast<double>(inferred_total) <
                                    cfg.params.lazy_ratio_threshold *
                                        static_cast<double>(rec.requested_volume);
    }
    if (rec.sample_verdict) {
        std::set<std::int64_t> exec_ids = ex.executed.all_ids();
        bool truly_honest = true;
        for (std::int64_t id : ex.requested.all_ids())
            if (!exec_ids.count(id)) {
                truly_honest = false;
                break;
            }
        rec.metric3_correct = (rec.sample_verdict->honest == truly_honest);
    }
    return rec;
}

BenchmarkReport aggregate(const BenchContext& ctx, std::vector<TrialRecord> records) {
    BenchmarkReport report;
    report.config_json = scenario_to_json(ctx.cfg);
    report.trials_requested = ctx.cfg.trials;
    report.tau_used = ctx.tau;

    int m1_total = 0, m1_correct = 0;
    int m3_total = 0, m3_correct = 0;
    std::vector<double> deviations;
    for (const TrialRecord& rec : records) {
        if (rec.skipped) {
            ++report.trials_skipped;
            continue;
        }
        ++report.trials_completed;
        if (rec.metric1_correct) {
            ++m1_total;
            if (*rec.metric1_correct) ++m1_correct;
        }
        if (rec.metric2_deviation) deviations.push_back(*rec.metric2_deviation);
        if (rec.metric3_correct) {
            ++m3_total;
            if (*rec.metric3_correct) ++m3_correct;
        }
    }
    if (report.trials_completed == 0)
        throw infeasible_error("every trial was skipped; nothing to report");
    if (m1_total > 0) report.metric1_accuracy = static_cast<double>(m1_correct) / m1_total;
    if (m3_total > 0) report.metric3_accuracy = static_cast<double>(m3_correct) / m3_total;
    if (!deviations.empty()) {
        report.metric2_mean_deviation =
            std::accumulate(deviations.begin(), deviations.end(), 0.0) / deviations.size();
        std::sort(deviations.begin(), deviations.end());
        std::size_t mid = deviations.size() / 2;
        report.metric2_median_deviation = deviations.size() % 2 == 1
                                              ? deviations[mid]
                                              : 0.5 * (deviations[mid - 1] + deviations[mid]);
    }
    report.records = std::move(records);
    return report;
}

}  // namespace

TrialRecord run_trial(const ScenarioConfig& cfg, int trial_index) {
    if (trial_index < 0 || trial_index >= cfg.trials)
        throw invalid_input("trial_index out of range");
    BenchContext ctx = make_context(cfg, true);
    return run_trial_in_context(ctx, trial_index);
}

BenchmarkReport run_benchmark(const ScenarioConfig& cfg) {
    BenchContext ctx = make_context(cfg, true);
    std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, resolve_worker_count(),
                 [&](int i) { records[i] = run_trial_in_context(ctx, i); });
    return aggregate(ctx, std::move(records));
}

double calibrate_tau(const ScenarioConfig& cfg, int honest_runs) {
    if (honest_runs < 10) throw invalid_input("tau calibration needs at least 10 honest runs");
    BenchContext ctx = make_context(cfg, false);
    std::vector<double> gaps(static_cast<std::size_t>(honest_runs), 0.0);
    parallel_for(honest_runs, resolve_worker_count(), [&](int i) {
        gaps[i] = gap_ratio_of_honest_run(
            ctx, mix_seed(cfg.master_seed, tag_seed("calibration"), static_cast<std::uint64_t>(i)),
            i);
    });
    return percentile95_nearest_rank(gaps);
}

// -- Report serialization -----------------------------------------------------------

namespace {

ordered_json record_to_json(const TrialRecord& rec) {
    ordered_json j;
    j["trial_index"] = rec.trial_index;
    j["trial_seed"] = rec.trial_seed;
    j["behavior"] = rec.behavior_kind;
    j["target_classes"] = rec.target_classes;
    j["requested_volume"] = rec.requested_volume;
    j["executed_volume"] = rec.executed_volume;
    if (rec.skipped) {
        j["skipped"] = true;
        j["skip_reason"] = rec.skip_reason;
        return j;
    }
    if (rec.class_verdict) {
        const ClassVerdict& v = *rec.class_verdict;
        ordered_json cv;
        cv["threshold"] = v.threshold;
        ordered_json per = ordered_json::object();
        for (const auto& [label, entry] : v.per_class)
            per[std::to_string(label)] = {{"ms_o", entry.ms_o},
                                          {"ms_u", entry.ms_u},
                                          {"ds", entry.ds},
                                          {"relative_change", entry.relative_change},
                                          {"unlearned", entry.unlearned}};
        cv["per_class"] = std::move(per);
        j["class_verdict"] = std::move(cv);
    }
    if (!rec.volume_estimates.empty()) {
        ordered_json arr = ordered_json::array();
        for (const VolumeEstimate& est : rec.volume_estimates) {
            ordered_json e;
            e["target_class"] = est.target_class;
            e["ds"] = est.ds;
            e["inferred_volume"] = est.inferred_volume;
            if (est.deviation >= 0.0) e["deviation"] = est.deviation;
            arr.push_back(std::move(e));
        }
        j["volume_estimates"] = std::move(arr);
    }
    if (rec.sample_verdict) {
        const SampleVerdict& v = *rec.sample_verdict;
        j["sample_verdict"] = {{"ms_u_test", v.ms_u_test},
                               {"ms_u_tar", v.ms_u_tar},
                               {"gap_ratio", v.gap_ratio},
                               {"tau", v.tau},
                               {"honest", v.honest}};
    }
    if (rec.metric1_correct) j["metric1_correct"] = *rec.metric1_correct;
    if (rec.metric2_deviation) j["metric2_deviation"] = *rec.metric2_deviation;
    if (rec.metric2_correct) j["metric2_correct"] = *rec.metric2_correct;
    if (rec.metric2_lazy_flag) j["metric2_lazy_flag"] = *rec.metric2_lazy_flag;
    if (rec.metric3_correct) j["metric3_correct"] = *rec.metric3_correct;
    return j;
}

TrialRecord record_from_json(const ordered_json& j) {
    TrialRecord rec;
    rec.trial_index = j.at("trial_index").get<int>();
    rec.trial_seed = j.at("trial_seed").get<std::uint64_t>();
    rec.behavior_kind = j.at("behavior").get<std::string>();
    rec.target_classes = j.at("target_classes").get<std::vector<int>>();
    rec.requested_volume = j.at("requested_volume").get<std::int64_t>();
    rec.executed_volume = j.at("executed_volume").get<std::int64_t>();
    if (j.value("skipped", false)) {
        rec.skipped = true;
        rec.skip_reason = j.at("skip_reason").get<std::string>();
        return rec;
    }
    if (j.contains("class_verdict")) {
        ClassVerdict v;
        v.threshold = j.at("class_verdict").at("threshold").get<double>();
        for (const auto& [key, entry] : j.at("class_verdict").at("per_class").items()) {
            ClassVerdict::PerClass pc;
            pc.ms_o = entry.at("ms_o").get<double>();
            pc.ms_u = entry.at("ms_u").get<double>();
            pc.ds = entry.at("ds").get<double>();
            pc.relative_change = entry.at("relative_change").get<double>();
            pc.unlearned = entry.at("unlearned").get<bool>();
            v.per_class[std::stoi(key)] = pc;
        }
        rec.class_verdict = std::move(v);
    }
    if (j.contains("volume_estimates")) {
        for (const auto& e : j.at("volume_estimates")) {
            VolumeEstimate est;
            est.target_class = e.at("target_class").get<int>();
            est.ds = e.at("ds").get<double>();
            est.inferred_volume = e.at("inferred_volume").get<std::int64_t>();
            if (e.contains("deviation")) est.deviation = e.at("deviation").get<double>();
            rec.volume_estimates.push_back(est);
        }
    }
    if (j.contains("sample_verdict")) {
        SampleVerdict v;
        const auto& s = j.at("sample_verdict");
        v.ms_u_test = s.at("ms_u_test").get<double>();
        v.ms_u_tar = s.at("ms_u_tar").get<double>();
        v.gap_ratio = s.at("gap_ratio").get<double>();
        v.tau = s.at("tau").get<double>();
        v.honest = s.at("honest").get<bool>();
        rec.sample_verdict = v;
    }
    if (j.contains("metric1_correct")) rec.metric1_correct = j.at("metric1_correct").get<bool>();
    if (j.contains("metric2_deviation"))
        rec.metric2_deviation = j.at("metric2_deviation").get<double>();
    if (j.contains("metric2_correct")) rec.metric2_correct = j.at("metric2_correct").get<bool>();
    if (j.contains("metric2_lazy_flag"))
        rec.metric2_lazy_flag = j.at("metric2_lazy_flag").get<bool>();
    if (j.contains("metric3_correct")) rec.metric3_correct = j.at("metric3_correct").get<bool>();
    return rec;
}

}  // namespace

std::string report_to_json(const BenchmarkReport& report) {
    ordered_json j;
    j["config"] = ordered_json::parse(report.config_json);
    ordered_json summary;
    summary["trials_requested"] = report.trials_requested;
    summary["trials_completed"] = report.trials_completed;
    summary["trials_skipped"] = report.trials_skipped;
    if (report.tau_used) summary["tau_used"] = *report.tau_used;
    if (report.metric1_accuracy) summary["metric1_accuracy"] = *report.metric1_accuracy;
    if (report.metric2_mean_deviation)
        summary["metric2_mean_deviation"] = *report.metric2_mean_deviation;
    if (report.metric2_median_deviation)
        summary["metric2_median_deviation"] = *report.metric2_median_deviation;
    if (report.metric3_accuracy) summary["metric3_accuracy"] = *report.metric3_accuracy;
    j["summary"] = std::move(summary);
    ordered_json trials = ordered_json::array();
    for (const TrialRecord& rec : report.records) trials.push_back(record_to_json(rec));
    j["trials"] = std::move(trials);
    return j.dump(2);
}

BenchmarkReport report_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw format_error(std::string("bad report JSON: ") + e.what());
    }
    BenchmarkReport report;
    try {
        report.config_json = j.at("config").dump(2);
        const auto& s = j.at("summary");
        report.trials_requested = s.at("trials_requested").get<int>();
        report.trials_completed = s.at("trials_completed").get<int>();
        report.trials_skipped = s.at("trials_skipped").get<int>();
        if (s.contains("tau_used")) report.tau_used = s.at("tau_used").get<double>();
        if (s.contains("metric1_accuracy"))
            report.metric1_accuracy = s.at("metric1_accuracy").get<double>();
        if (s.contains("metric2_mean_deviation"))
            report.metric2_mean_deviation = s.at("metric2_mean_deviation").get<double>();
        if (s.contains("metric2_median_deviation"))
            report.metric2_median_deviation = s.at("metric2_median_deviation").get<double>();
        if (s.contains("metric3_accuracy"))
            report.metric3_accuracy = s.at("metric3_accuracy").get<double>();
        for (const auto& t : j.at("trials")) report.records.push_back(record_from_json(t));
    } catch (const ordered_json::exception& e) {
        throw format_error(std::string("bad report JSON: ") + e.what());
    }
    return report;
}

// -- Equality (timings excluded on purpose) -------------------------------------------

namespace {

bool same_verdict(const std::optional<ClassVerdict>& a, const std::optional<ClassVerdict>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    if (a->threshold != b->threshold || a->per_class.size() != b->per_class.size()) return false;
    for (const auto& [label, ea] : a->per_class) {
        auto it = b->per_class.find(label);
        if (it == b->per_class.end()) return false;
        const auto& eb = it->second;
        if (ea.ms_o != eb.ms_o || ea.ms_u != eb.ms_u || ea.ds != eb.ds ||
            ea.relative_change != eb.relative_change || ea.unlearned != eb.unlearned)
            return false;
    }
    return true;
}

bool same_estimates(const std::vector<VolumeEstimate>& a, const std::vector<VolumeEstimate>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].target_class != b[i].target_class || a[i].ds != b[i].ds ||
            a[i].inferred_volume != b[i].inferred_volume || a[i].deviation != b[i].deviation)
            return false;
    return true;
}

bool same_sample(const std::optional<SampleVerdict>& a, const std::optional<SampleVerdict>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->ms_u_test == b->ms_u_test && a->ms_u_tar == b->ms_u_tar &&
           a->gap_ratio == b->gap_ratio && a->honest == b->honest && a->tau == b->tau;
}

}  // namespace

bool operator==(const TrialRecord& a, const TrialRecord& b) {
    return a.trial_index == b.trial_index && a.trial_seed == b.trial_seed &&
           a.behavior_kind == b.behavior_kind && a.target_classes == b.target_classes &&
           a.requested_volume == b.requested_volume && a.executed_volume == b.executed_volume &&
           a.skipped == b.skipped && a.skip_reason == b.skip_reason &&
           same_verdict(a.class_verdict, b.class_verdict) &&
           same_estimates(a.volume_estimates, b.volume_estimates) &&
           same_sample(a.sample_verdict, b.sample_verdict) &&
           a.metric1_correct == b.metric1_correct && a.metric2_deviation == b.metric2_deviation &&
           a.metric2_correct == b.metric2_correct && a.metric2_lazy_flag == b.metric2_lazy_flag &&
           a.metric3_correct == b.metric3_correct;
}

bool operator==(const BenchmarkReport& a, const BenchmarkReport& b) {
    return a.config_json == b.config_json && a.trials_requested == b.trials_requested &&
           a.trials_completed == b.trials_completed && a.trials_skipped == b.trials_skipped &&
           a.tau_used == b.tau_used && a.metric1_accuracy == b.metric1_accuracy &&
           a.metric2_mean_deviation == b.metric2_mean_deviation &&
           a.metric2_median_deviation == b.metric2_median_deviation &&
           a.metric3_accuracy == b.metric3_accuracy && a.records == b.records;
}

// -- Emission ---------------------------------------------------------------------------

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

template <typename T>
std::string opt_str(const std::optional<T>& v) {
    if (!v) return "";
    ordered_json j = *v;
    return j.dump();
}

}  // namespace

void emit_report(const BenchmarkReport& report, const std::string& format,
                 const std::filesystem::path& path) {
    if (report.records.empty()) throw invalid_input("refusing to emit an empty report");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw format_error("cannot open " + path.string() + " for writing");
    if (format == "json") {
        out << report_to_json(report) << '\n';
    } else if (format == "csv") {
        out << "trial_index,trial_seed,behavior,target_classes,requested_volume,"
               "executed_volume,skipped,skip_reason,metric1_correct,flagged_classes,"
               "inferred_volume,metric2_deviation,metric2_correct,metric2_lazy_flag,"
               "gap_ratio,metric3_honest,metric3_correct\n";
        for (const TrialRecord& rec : report.records) {
            std::string classes;
            for (std::size_t i = 0; i < rec.target_classes.size(); ++i)
                classes += (i ? ";" : "") + std::to_string(rec.target_classes[i]);
            std::string flagged;
            if (rec.class_verdict) {
                std::vector<int> fc = rec.class_verdict->flagged_classes();
                for (std::size_t i = 0; i < fc.size(); ++i)
                    flagged += (i ? ";" : "") + std::to_string(fc[i]);
            }
            std::string inferred;
            if (!rec.volume_estimates.empty()) {
                std::int64_t total = 0;
                for (const VolumeEstimate& est : rec.volume_estimates)
                    total += est.inferred_volume;
                inferred = std::to_string(total);
            }
            std::string gap;
            std::string honest;
            if (rec.sample_verdict) {
                gap = ordered_json(rec.sample_verdict->gap_ratio).dump();
                honest = rec.sample_verdict->honest ? "true" : "false";
            }
            out << rec.trial_index << ',' << rec.trial_seed << ',' << rec.behavior_kind << ','
                << classes << ',' << rec.requested_volume << ',' << rec.executed_volume << ','
                << (rec.skipped ? "true" : "false") << ',' << csv_escape(rec.skip_reason) << ','
                << opt_str(rec.metric1_correct) << ',' << flagged << ',' << inferred << ','
                << opt_str(rec.metric2_deviation) << ',' << opt_str(rec.metric2_correct) << ','
                << opt_str(rec.metric2_lazy_flag) << ',' << gap << ',' << honest << ','
                << opt_str(rec.metric3_correct) << '\n';
        }
        out << "# aggregate,trials_requested," << report.trials_requested << '\n';
        out << "# aggregate,trials_completed," << report.trials_completed << '\n';
        out << "# aggregate,trials_skipped," << report.trials_skipped << '\n';
        if (report.tau_used)
            out << "# aggregate,tau_used," << ordered_json(*report.tau_used).dump() << '\n';
        if (report.metric1_accuracy)
            out << "# aggregate,metric1_accuracy," << ordered_json(*report.metric1_accuracy).dump()
                << '\n';
        if (report.metric2_mean_deviation)
            out << "# aggregate,metric2_mean_deviation,"
                << ordered_json(*report.metric2_mean_deviation).dump() << '\n';
        if (report.metric2_median_deviation)
            out << "# aggregate,metric2_median_deviation,"
                << ordered_json(*report.metric2_median_deviation).dump() << '\n';
        if (report.metric3_accuracy)
            out << "# aggregate,metric3_accuracy," << ordered_json(*report.metric3_accuracy).dump()
                << '\n';
    } else {
        throw invalid_input("unknown report format '" + format + "'");
    }
    if (!out) throw format_error("failed writing " + path.string());
}

// -- Sweeps ------------------------------------------------------------------------------

std::vector<SweepPoint> run_sweep(const ScenarioConfig& cfg) {
    if (!cfg.sweep) throw invalid_input("config has no sweep block");
    ordered_json base = ordered_json::parse(scenario_to_json(cfg));
    base.erase("sweep");
    std::vector<SweepPoint> points;
    for (const std::string& value : cfg.sweep->values) {
        ordered_json patched = base;
        patched[ordered_json::json_pointer(cfg.sweep->pointer)] = ordered_json::parse(value);
        ScenarioConfig sub = scenario_from_json(patched.dump());
        SweepPoint point;
        point.value = value;
        point.report = run_benchmark(sub);
        points.push_back(std::move(point));
    }
    return points;
}

void emit_plot_csv(const std::string& pointer, const std::vector<SweepPoint>& points,
                   const std::filesystem::path& path) {
    if (points.empty()) throw invalid_input("no sweep points to plot");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw format_error("cannot open " + path.string() + " for writing");
    out << "param,value,metric1_accuracy,metric2_mean_deviation,metric3_accuracy\n";
    for (const SweepPoint& p : points) {
        out << csv_escape(pointer) << ',' << csv_escape(p.value) << ','
            << opt_str(p.report.metric1_accuracy) << ','
            << opt_str(p.report.metric2_mean_deviation) << ','
            << opt_str(p.report.metric3_accuracy) << '\n';
    }
    if (!out) throw format_error("failed writing " + path.string());
}

}  // namespace truvrf
