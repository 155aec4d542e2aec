#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "truvrf/unlearning.hpp"

namespace truvrf {

/// Where probe data comes from. TargetData = the very samples named in the
/// unlearning request; TestData = held-out samples the model never trained on.
enum class AuxSource { TargetData, TestData };

std::string to_string(AuxSource source);
AuxSource aux_source_from_string(const std::string& name);

/// Balanced per-class probe sets: every slice holds exactly per_class_count
/// samples of a single class.
struct AuxiliaryData {
    AuxSource source = AuxSource::TestData;
    int per_class_count = 0;
    std::map<int, LabeledDataset> slices;

    void validate() const;
    std::vector<int> classes() const;
};

/// Draws per_class_count samples per class from `data` (every class present
/// there), without replacement, deterministically from seed.
AuxiliaryData make_auxiliary(const LabeledDataset& data, int per_class_count, AuxSource source,
                             std::uint64_t seed);

/// Probe sets drawn from the requested samples themselves (what a Metric-III
/// audit feeds as "target data"). Classes = the request's classes.
AuxiliaryData make_target_auxiliary(const LabeledDataset& data, const UnlearnRequest& request,
                                    int per_class_count, std::uint64_t seed);

/// Per-class model sensitivity: how hard probe training on class c jolts the
/// parameters, rescaled by the probe rate so it is a pure gradient quantity.
struct SensitivityProfile {
    std::map<int, double> ms;
    double alpha = 0.0;
    int probe_passes = 0;
    AuxSource source = AuxSource::TestData;
    int per_class_count = 0;

    double at(int label) const;
    /// Sum over all classes in the profile.
    double total() const;
};

/// For each class c: copy the model, run probe_passes full-batch gradient steps
/// on aux[c] at rate alpha, and record MS_c = sum_i |theta_i - theta'_i| / alpha.
/// With probe_passes = 1 this is exactly the L1 norm of the class-c gradient.
/// The input model is never touched.
SensitivityProfile extract_sensitivity(const Model& model, const AuxiliaryData& aux, double alpha,
                                       int probe_passes = 1);

/// Ensemble sensitivity: the ensemble's parameter vector is the concatenation
/// of its sub-models', so MS sums over shards (each probed independently).
SensitivityProfile extract_sensitivity(const SisaEnsemble& ensemble, const AuxiliaryData& aux,
                                       double alpha, int probe_passes = 1);

SensitivityProfile extract_sensitivity(const AnyModel& model, const AuxiliaryData& aux,
                                       double alpha, int probe_passes = 1);

/// Per-class DS = MS_u - MS_o. Rejects profiles whose probe configs differ.
std::map<int, double> sensitivity_difference(const SensitivityProfile& prof_u,
                                             const SensitivityProfile& prof_o);

std::string profile_to_json(const SensitivityProfile& profile);
SensitivityProfile profile_from_json(const std::string& text);

}  // namespace truvrf
