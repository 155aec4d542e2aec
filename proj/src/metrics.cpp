#include "truvrf/metrics.hpp"

#include <cmath>

#include <json.hpp>

namespace truvrf {

using ordered_json = nlohmann::ordered_json;

namespace {

void check_comparable(const AnyModel& model_o, const AnyModel& model_u) {
    if (model_o.index() != model_u.index())
        throw invalid_input("cannot compare a single model with an ensemble");
    if (const Model* mo = std::get_if<Model>(&model_o)) {
        if (mo->spec != std::get<Model>(model_u).spec)
            throw invalid_input("models have different architectures");
    } else {
        const SisaEnsemble& eo = std::get<SisaEnsemble>(model_o);
        const SisaEnsemble& eu = std::get<SisaEnsemble>(model_u);
        if (eo.num_shards() != eu.num_shards())
            throw invalid_input("ensembles have different shard counts");
        if (eo.spec() != eu.spec())
            throw invalid_input("ensembles have different architectures");
    }
}

}  // namespace

std::vector<int> ClassVerdict::flagged_classes() const {
    std::vector<int> out;
    for (const auto& [label, entry] : per_class)
        if (entry.unlearned) out.push_back(label);
    return out;
}

ClassVerdict verify_class(const AnyModel& model_o, const AnyModel& model_u,
                          const AuxiliaryData& test_aux, double alpha, double threshold,
                          int probe_passes) {
    if (threshold < 0.0) throw invalid_input("threshold must be >= 0");
    check_comparable(model_o, model_u);
    SensitivityProfile prof_o = extract_sensitivity(model_o, test_aux, alpha, probe_passes);
    SensitivityProfile prof_u = extract_sensitivity(model_u, test_aux, alpha, probe_passes);
    std::map<int, double> ds = sensitivity_difference(prof_u, prof_o);

    ClassVerdict verdict;
    verdict.threshold = threshold;
    for (const auto& [label, d] : ds) {
        ClassVerdict::PerClass entry;
        entry.ms_o = prof_o.at(label);
        entry.ms_u = prof_u.at(label);
        entry.ds = d;
        entry.relative_change = std::abs(d) / std::max(entry.ms_o, kEpsFloor);
        entry.unlearned = entry.relative_change >= threshold;
        verdict.per_class[label] = entry;
    }
    return verdict;
}

UnlearningMeasurement build_unlearning_measurement(const LabeledDataset& target_class_data,
                                                   const LabeledDataset& other_class_data,
                                                   const ModelSpec& spec, const TrainConfig& cfg,
                                                   int n, int batch_volume,
                                                   const AuxiliaryData& test_aux, double alpha,
                                                   std::uint64_t seed, int probe_passes) {
    ShadowTrainer plain = [&spec, &cfg](const LabeledDataset& data, std::uint64_t s) -> AnyModel {
        TrainConfig shadow_cfg = cfg;
        shadow_cfg.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
        return train(init_model(spec, mix_seed(s, tag_seed("init"))), data, shadow_cfg);
    };
    return build_unlearning_measurement(target_class_data, other_class_data, n, batch_volume,
                                        test_aux, alpha, seed, probe_passes, plain);
}

UnlearningMeasurement build_unlearning_measurement(const LabeledDataset& target_class_data,
                                                   const LabeledDataset& other_class_data,
                                                   int n, int batch_volume,
                                                   const AuxiliaryData& test_aux, double alpha,
                                                   std::uint64_t seed, int probe_passes,
                                                   const ShadowTrainer& trainer) {
    if (n < 2) throw invalid_input("need at least 2 shadow models");
    if (batch_volume < 1) throw invalid_input("batch_volume must be >= 1");
    if (target_class_data.class_index().size() != 1)
        throw invalid_input("target_class_data must hold exactly one class");
    int target_class = target_class_data.class_index().begin()->first;
    if (other_class_data.class_count(target_class) > 0)
        throw invalid_input("other_class_data must not contain the target class");
    std::size_t need = static_cast<std::size_t>(n) * batch_volume;
    if (target_class_data.size() < need)
        throw invalid_input("target class has " + std::to_string(target_class_data.size()) +
                            " samples, shadow sweep needs " + std::to_string(need));
    if (!test_aux.slices.count(target_class))
        throw invalid_input("test probes lack the target class");

    // One seeded order over the target class; shadow j takes the first
    // batch_volume*(j+1) entries, so the volume levels nest incrementally.
    Rng pick_rng(mix_seed(seed, tag_seed("shadow-pool")));
    const auto& target_ids = target_class_data.ids_of_class(target_class);
    std::vector<std::size_t> order = pick_rng.permutation(target_ids.size());

    std::vector<double> shadow_ms(static_cast<std::size_t>(n), 0.0);
    parallel_for(n, resolve_worker_count(), [&](int j) {
        std::size_t volume = static_cast<std::size_t>(batch_volume) * (j + 1);
        std::vector<Sample> samples = other_class_data.samples();
        for (std::size_t i = 0; i < volume; ++i)
            samples.push_back(target_class_data.by_id(target_ids[order[i]]));
        LabeledDataset shadow_data(std::move(samples), other_class_data.num_classes());

        // Every shadow trains from one shared seed: the sweep is a controlled
        // comparison where volume is the only thing that varies, so consecutive
        // differences are not drowned in initialization noise.
        AnyModel shadow = trainer(shadow_data, mix_seed(seed, tag_seed("shadow")));
        shadow_ms[j] = extract_sensitivity(shadow, test_aux, alpha, probe_passes)
                           .at(target_class);
    });

    UnlearningMeasurement um;
    um.target_class = target_class;
    um.batch_volume = batch_volume;
    um.shadow_count = n;
    um.shadow_ms = shadow_ms;
    um.um_batch = (shadow_ms.front() - shadow_ms.back()) / static_cast<double>(n - 1);
    if (!(um.um_batch > 0.0))
        throw calibration_error("shadow sweep is not decreasing (um_batch = " +
                                std::to_string(um.um_batch) +
                                "); raise shadow count or batch volume");
    return um;
}

VolumeEstimate verify_volume(const AnyModel& model_o, const AnyModel& model_u,
                             const UnlearningMeasurement& um, const AuxiliaryData& target_aux,
                             double alpha, int probe_passes) {
    if (!(um.um_batch > 0.0)) throw invalid_input("measurement has nonpositive um_batch");
    if (um.batch_volume < 1) throw invalid_input("measurement has invalid batch_volume");
    if (!target_aux.slices.count(um.target_class))
        throw invalid_input("probes lack the measured class");
    check_comparable(model_o, model_u);

    SensitivityProfile prof_o = extract_sensitivity(model_o, target_aux, alpha, probe_passes);
    SensitivityProfile prof_u = extract_sensitivity(model_u, target_aux, alpha, probe_passes);

    VolumeEstimate est;
    est.target_class = um.target_class;
    est.ds = prof_u.at(um.target_class) - prof_o.at(um.target_class);
    est.inferred_volume = quantized_volume(est.ds, um.um_batch, um.batch_volume);
    return est;
}

std::int64_t quantized_volume(double ds, double um_batch, int batch_volume) {
    if (!(um_batch > 0.0)) throw invalid_input("um_batch must be positive");
    if (batch_volume < 1) throw invalid_input("batch_volume must be positive");
    if (ds <= 0.0) return 0;
    return static_cast<std::int64_t>(std::ceil(ds / um_batch)) * batch_volume;
}

SampleVerdict verify_sample(const AnyModel& model_u, const AuxiliaryData& target_aux,
                            const AuxiliaryData& test_aux, double alpha, double tau,
                            int probe_passes) {
    if (target_aux.source != AuxSource::TargetData)
        throw invalid_input("target probes must come from the requested samples");
    if (test_aux.source != AuxSource::TestData)
        throw invalid_input("reference probes must come from held-out test data");
    if (target_aux.per_class_count != test_aux.per_class_count)
        throw invalid_input("probe sizes differ between target and test data");
    if (target_aux.classes() != test_aux.classes())
        throw invalid_input("probe class sets differ between target and test data");

    SensitivityProfile prof_tar = extract_sensitivity(model_u, target_aux, alpha, probe_passes);
    SensitivityProfile prof_tst = extract_sensitivity(model_u, test_aux, alpha, probe_passes);

    SampleVerdict verdict;
    verdict.tau = tau;
    verdict.ms_u_tar = prof_tar.total();
    verdict.ms_u_test = prof_tst.total();
    verdict.gap_ratio =
        (verdict.ms_u_test - verdict.ms_u_tar) / std::max(verdict.ms_u_test, kEpsFloor);
    verdict.honest = verdict.gap_ratio <= tau;
    return verdict;
}

double deviation(std::int64_t true_volume, std::int64_t inferred_volume) {
    if (true_volume <= 0) throw invalid_input("true volume must be positive");
    return std::abs(static_cast<double>(true_volume - inferred_volume)) /
           static_cast<double>(true_volume);
}

// -- JSON views -----------------------------------------------------------------

std::string class_verdict_to_json(const ClassVerdict& verdict) {
    ordered_json j;
    j["threshold"] = verdict.threshold;
    ordered_json per = ordered_json::object();
    for (const auto& [label, entry] : verdict.per_class)
        per[std::to_string(label)] = {{"ms_o", entry.ms_o},
                                      {"ms_u", entry.ms_u},
                                      {"ds", entry.ds},
                                      {"relative_change", entry.relative_change},
                                      {"unlearned", entry.unlearned}};
    j["per_class"] = std::move(per);
    j["flagged_classes"] = verdict.flagged_classes();
    return j.dump(2);
}

std::string measurement_to_json(const UnlearningMeasurement& um) {
    ordered_json j;
    j["target_class"] = um.target_class;
    j["um_batch"] = um.um_batch;
    j["batch_volume"] = um.batch_volume;
    j["shadow_count"] = um.shadow_count;
    j["shadow_ms"] = um.shadow_ms;
    return j.dump(2);
}

UnlearningMeasurement measurement_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw format_error(std::string("bad measurement JSON: ") + e.what());
    }
    UnlearningMeasurement um;
    try {
        um.target_class = j.at("target_class").get<int>();
        um.um_batch = j.at("um_batch").get<double>();
        um.batch_volume = j.at("batch_volume").get<int>();
        um.shadow_count = j.at("shadow_count").get<int>();
        um.shadow_ms = j.at("shadow_ms").get<std::vector<double>>();
    } catch (const ordered_json::exception& e) {
        throw format_error(std::string("bad measurement JSON: ") + e.what());
    }
    return um;
}

std::string volume_estimate_to_json(const VolumeEstimate& estimate) {
    ordered_json j;
    j["target_class"] = estimate.target_class;
    j["ds"] = estimate.ds;
    j["inferred_volume"] = estimate.inferred_volume;
    if (estimate.deviation >= 0.0) j["deviation"] = estimate.deviation;
    return j.dump(2);
}

std::string sample_verdict_to_json(const SampleVerdict& verdict) {
    ordered_json j;
    j["ms_u_test"] = verdict.ms_u_test;
    j["ms_u_tar"] = verdict.ms_u_tar;
    j["gap_ratio"] = verdict.gap_ratio;
    j["tau"] = verdict.tau;
    j["honest"] = verdict.honest;
    return j.dump(2);
}

}  // namespace truvrf
