#include "truvrf/sensitivity.hpp"

#include <cmath>

#include <json.hpp>

namespace truvrf {

using ordered_json = nlohmann::ordered_json;

std::string to_string(AuxSource source) {
    return source == AuxSource::TargetData ? "target_data" : "test_data";
}

AuxSource aux_source_from_string(const std::string& name) {
    if (name == "target_data") return AuxSource::TargetData;
    if (name == "test_data") return AuxSource::TestData;
    throw invalid_input("unknown auxiliary source '" + name + "'");
}

void AuxiliaryData::validate() const {
    if (per_class_count < 1) throw invalid_input("per_class_count must be >= 1");
    if (slices.empty()) throw invalid_input("auxiliary data has no class slices");
    for (const auto& [label, slice] : slices) {
        if (static_cast<int>(slice.size()) != per_class_count)
            throw invalid_input("class " + std::to_string(label) + " slice has " +
                                std::to_string(slice.size()) + " samples, expected " +
                                std::to_string(per_class_count));
        for (const Sample& s : slice.samples())
            if (s.label != label)
                throw invalid_input("auxiliary slice for class " + std::to_string(label) +
                                    " contains a sample of class " + std::to_string(s.label));
    }
}

std::vector<int> AuxiliaryData::classes() const {
    std::vector<int> out;
    for (const auto& [label, slice] : slices) out.push_back(label);
    return out;
}

AuxiliaryData make_auxiliary(const LabeledDataset& data, int per_class_count, AuxSource source,
                             std::uint64_t seed) {
    if (per_class_count < 1) throw invalid_input("per_class_count must be >= 1");
    AuxiliaryData aux;
    aux.source = source;
    aux.per_class_count = per_class_count;
    for (const auto& [label, ids] : data.class_index()) {
        if (static_cast<int>(ids.size()) < per_class_count)
            throw invalid_input("class " + std::to_string(label) + " has only " +
                                std::to_string(ids.size()) + " samples, need " +
                                std::to_string(per_class_count));
        Rng rng(mix_seed(seed, tag_seed("aux"), static_cast<std::uint64_t>(label)));
        std::vector<std::int64_t> pick;
        for (std::size_t p : rng.sample_indices(ids.size(),
                                                static_cast<std::size_t>(per_class_count)))
            pick.push_back(ids[p]);
        aux.slices.emplace(label, data.subset(pick));
    }
    aux.validate();
    return aux;
}

AuxiliaryData make_target_auxiliary(const LabeledDataset& data, const UnlearnRequest& request,
                                    int per_class_count, std::uint64_t seed) {
    validate_request(data, request);
    if (request.empty()) throw invalid_input("cannot build target probes from an empty request");
    AuxiliaryData aux;
    aux.source = AuxSource::TargetData;
    aux.per_class_count = per_class_count;
    for (const auto& [label, ids] : request.ids_by_class) {
        if (ids.empty()) continue;
        if (static_cast<int>(ids.size()) < per_class_count)
            throw invalid_input("request names only " + std::to_string(ids.size()) +
                                " samples of class " + std::to_string(label) + ", need " +
                                std::to_string(per_class_count));
        std::vector<std::int64_t> ordered(ids.begin(), ids.end());
        Rng rng(mix_seed(seed, tag_seed("target-aux"), static_cast<std::uint64_t>(label)));
        std::vector<std::int64_t> pick;
        for (std::size_t p : rng.sample_indices(ordered.size(),
                                                static_cast<std::size_t>(per_class_count)))
            pick.push_back(ordered[p]);
        aux.slices.emplace(label, data.subset(pick));
    }
    aux.validate();
    return aux;
}

double SensitivityProfile::at(int label) const {
    auto it = ms.find(label);
    if (it == ms.end())
        throw invalid_input("profile has no class " + std::to_string(label));
    return it->second;
}

double SensitivityProfile::total() const {
    double sum = 0.0;
    for (const auto& [label, value] : ms) sum += value;
    return sum;
}

SensitivityProfile extract_sensitivity(const Model& model, const AuxiliaryData& aux, double alpha,
                                       int probe_passes) {
    aux.validate();
    if (!(alpha > 0.0)) throw invalid_input("probe learning rate must be positive");
    if (probe_passes < 1) throw invalid_input("probe_passes must be >= 1");

    SensitivityProfile prof;
    prof.alpha = alpha;
    prof.probe_passes = probe_passes;
    prof.source = aux.source;
    prof.per_class_count = aux.per_class_count;
    for (const auto& [label, slice] : aux.slices) {
        Model probe = model;
        for (int pass = 0; pass < probe_passes; ++pass) {
            auto [loss, grad] = loss_and_grad(probe, slice);
            (void)loss;
            probe = sgd_step(probe, grad, alpha);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < model.params.size(); ++i)
            acc += std::abs(model.params[i] - probe.params[i]);
        prof.ms[label] = acc / alpha;
    }
    return prof;
}

SensitivityProfile extract_sensitivity(const SisaEnsemble& ensemble, const AuxiliaryData& aux,
                                       double alpha, int probe_passes) {
    if (ensemble.shards.empty()) throw invalid_input("ensemble has no shards");
    SensitivityProfile prof;
    for (std::size_t i = 0; i < ensemble.shards.size(); ++i) {
        SensitivityProfile sub =
            extract_sensitivity(ensemble.shards[i].sub_model, aux, alpha, probe_passes);
        if (i == 0) {
            prof = sub;
        } else {
            for (auto& [label, value] : prof.ms) value += sub.ms.at(label);
        }
    }
    return prof;
}

SensitivityProfile extract_sensitivity(const AnyModel& model, const AuxiliaryData& aux,
                                       double alpha, int probe_passes) {
    if (const Model* m = std::get_if<Model>(&model))
        return extract_sensitivity(*m, aux, alpha, probe_passes);
    return extract_sensitivity(std::get<SisaEnsemble>(model), aux, alpha, probe_passes);
}

std::map<int, double> sensitivity_difference(const SensitivityProfile& prof_u,
                                             const SensitivityProfile& prof_o) {
    if (prof_u.alpha != prof_o.alpha || prof_u.probe_passes != prof_o.probe_passes ||
        prof_u.per_class_count != prof_o.per_class_count)
        throw invalid_input("profiles were extracted with different probe configs");
    if (prof_u.ms.size() != prof_o.ms.size())
        throw invalid_input("profiles cover different class sets");
    std::map<int, double> ds;
    for (const auto& [label, mu] : prof_u.ms) {
        auto it = prof_o.ms.find(label);
        if (it == prof_o.ms.end())
            throw invalid_input("profiles cover different class sets");
        ds[label] = mu - it->second;
    }
    return ds;
}

std::string profile_to_json(const SensitivityProfile& profile) {
    ordered_json j;
    j["alpha"] = profile.alpha;
    j["probe_passes"] = profile.probe_passes;
    j["source"] = {{"kind", to_string(profile.source)},
                   {"per_class_count", profile.per_class_count}};
    ordered_json ms = ordered_json::object();
    for (const auto& [label, value] : profile.ms) ms[std::to_string(label)] = value;
    j["ms"] = std::move(ms);
    return j.dump(2);
}

SensitivityProfile profile_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw format_error(std::string("bad profile JSON: ") + e.what());
    }
    SensitivityProfile prof;
    try {
        prof.alpha = j.at("alpha").get<double>();
        prof.probe_passes = j.at("probe_passes").get<int>();
        prof.source = aux_source_from_string(j.at("source").at("kind").get<std::string>());
        prof.per_class_count = j.at("source").at("per_class_count").get<int>();
        for (const auto& [key, value] : j.at("ms").items())
            prof.ms[std::stoi(key)] = value.get<double>();
    } catch (const ordered_json::exception& e) {
        throw format_error(std::string("bad profile JSON: ") + e.what());
    }
    return prof;
}

}  // namespace truvrf
