#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "truvrf/sensitivity.hpp"

namespace truvrf {

/// Floor for denominators of relative quantities; keeps degenerate
/// zero-sensitivity profiles from dividing by zero.
inline constexpr double kEpsFloor = 1e-12;

// -- Metric I: which classes were unlearned -----------------------------------

struct ClassVerdict {
    struct PerClass {
        double ms_o = 0.0;
        double ms_u = 0.0;
        double ds = 0.0;               // ms_u - ms_o
        double relative_change = 0.0;  // |ds| / max(ms_o, eps)
        bool unlearned = false;        // relative_change >= threshold
    };
    std::map<int, PerClass> per_class;
    double threshold = 0.0;

    std::vector<int> flagged_classes() const;
};

/// Probes both models with identical configs and flags every class whose
/// sensitivity moved by at least `threshold` relative to the origin model.
/// A server that returned model_o unchanged produces relative_change == 0
/// exactly, for every class.
ClassVerdict verify_class(const AnyModel& model_o, const AnyModel& model_u,
                          const AuxiliaryData& test_aux, double alpha, double threshold,
                          int probe_passes = 1);

// -- Metric II: how much was unlearned ----------------------------------------

/// Shadow-model calibration: how much one batch_volume of removed class-c data
/// moves that class's sensitivity.
struct UnlearningMeasurement {
    int target_class = 0;
    double um_batch = 0.0;  // positive: sensitivity gained per batch_volume removed
    int batch_volume = 0;
    int shadow_count = 0;
    std::vector<double> shadow_ms;  // MS at volumes batch_volume*1 .. batch_volume*n
};

/// Trains shadow_count models whose class-c volume steps through
/// batch_volume*1..batch_volume*n (other classes fixed), probes each, and
/// averages the consecutive sensitivity drops:
/// um_batch = (MS_1 - MS_n)/(n-1). Throws calibration_error if that is <= 0
/// (non-monotone sweep; raise n or batch_volume).
UnlearningMeasurement build_unlearning_measurement(const LabeledDataset& target_class_data,
                                                   const LabeledDataset& other_class_data,
                                                   const ModelSpec& spec, const TrainConfig& cfg,
                                                   int n, int batch_volume,
                                                   const AuxiliaryData& test_aux, double alpha,
                                                   std::uint64_t seed, int probe_passes = 1);

/// Builds one shadow model from (data, seed). Lets the calibration mirror the
/// server's framework — e.g. SISA audits calibrate against ensemble shadows.
using ShadowTrainer = std::function<AnyModel(const LabeledDataset& data, std::uint64_t seed)>;

UnlearningMeasurement build_unlearning_measurement(const LabeledDataset& target_class_data,
                                                   const LabeledDataset& other_class_data,
                                                   int n, int batch_volume,
                                                   const AuxiliaryData& test_aux, double alpha,
                                                   std::uint64_t seed, int probe_passes,
                                                   const ShadowTrainer& trainer);

struct VolumeEstimate {
    int target_class = 0;
    double ds = 0.0;
    std::int64_t inferred_volume = 0;  // nonnegative multiple of batch_volume
    double deviation = -1.0;           // harness-filled vs ground truth; <0 = unset
};

/// ceil(ds / um_batch) * batch_volume, clamped to 0 when ds <= 0. The inferred
/// volume is always a nonnegative multiple of batch_volume.
std::int64_t quantized_volume(double ds, double um_batch, int batch_volume);

/// inferred = quantized_volume(DS, um_batch, batch_volume).
VolumeEstimate verify_volume(const AnyModel& model_o, const AnyModel& model_u,
                             const UnlearningMeasurement& um, const AuxiliaryData& target_aux,
                             double alpha, int probe_passes = 1);

// -- Metric III: were the requested samples really the ones unlearned ----------

struct SampleVerdict {
    double ms_u_test = 0.0;
    double ms_u_tar = 0.0;
    double gap_ratio = 0.0;  // (ms_u_test - ms_u_tar) / max(ms_u_test, eps)
    bool honest = false;     // gap_ratio <= tau
    double tau = 0.0;
};

/// Compares the unlearned model's sensitivity on the allegedly-forgotten
/// samples against same-sized held-out probes. Data that was genuinely removed
/// probes like unseen test data (gap near 0); data secretly retained probes
/// much flatter (large positive gap).
SampleVerdict verify_sample(const AnyModel& model_u, const AuxiliaryData& target_aux,
                            const AuxiliaryData& test_aux, double alpha, double tau,
                            int probe_passes = 1);

// -- Scoring helper -------------------------------------------------------------

/// |true - inferred| / true.
double deviation(std::int64_t true_volume, std::int64_t inferred_volume);

// -- JSON views -----------------------------------------------------------------

std::string class_verdict_to_json(const ClassVerdict& verdict);
std::string measurement_to_json(const UnlearningMeasurement& um);
UnlearningMeasurement measurement_from_json(const std::string& text);
std::string volume_estimate_to_json(const VolumeEstimate& estimate);
std::string sample_verdict_to_json(const SampleVerdict& verdict);

}  // namespace truvrf
