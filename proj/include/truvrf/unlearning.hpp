#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "truvrf/nnet.hpp"

namespace truvrf {

/// One SISA shard: which sample IDs it owns, how many times it has been
/// retrained, and the current sub-model.
struct SisaShard {
    int shard_id = 0;
    std::vector<std::int64_t> ids;
    std::uint64_t generation = 0;
    Model sub_model;

    bool operator==(const SisaShard&) const = default;
};

/// Sharded ensemble with its (remaining) training data embedded so further
/// unlearning calls stay self-contained, including after a round-trip through
/// the container format.
///
/// Seed discipline: shard i at generation g trains from
/// init_model(spec, mix_seed(s, tag_seed("init"))) with shuffle seed
/// mix_seed(s, tag_seed("shuffle")), where s = sisa_shard_seed(base_seed, i, g).
struct SisaEnsemble {
    LabeledDataset data;
    TrainConfig train_cfg;
    std::uint64_t base_seed = 0;
    std::vector<SisaShard> shards;

    int num_shards() const { return static_cast<int>(shards.size()); }
    const ModelSpec& spec() const;
};

std::uint64_t sisa_shard_seed(std::uint64_t base_seed, int shard_id, std::uint64_t generation);

/// A trained artifact the auditor verifies: either one model or a SISA ensemble.
using AnyModel = std::variant<Model, SisaEnsemble>;

struct UnlearnOutcome {
    AnyModel model_o;
    AnyModel model_u;
    UnlearnRequest executed_request;
};

/// Retrain-from-scratch baseline: model_o = train(D), model_u = train(D \ request),
/// both from the same fresh init (so an empty request yields bit-identical models).
UnlearnOutcome retrain_unlearn(const LabeledDataset& data, const UnlearnRequest& request,
                               const ModelSpec& spec, const TrainConfig& cfg, std::uint64_t seed);

/// Round-robin sharding by ascending sample ID; sub-models trained independently
/// (parallel across shards, schedule-independent).
SisaEnsemble sisa_train(const LabeledDataset& data, int k, const ModelSpec& spec,
                        const TrainConfig& cfg, std::uint64_t seed);

/// Removes the requested IDs and retrains only the shards that owned any of
/// them; every other sub-model stays byte-identical.
SisaEnsemble sisa_unlearn(const SisaEnsemble& ensemble, const UnlearnRequest& request);

/// Majority vote over sub-model argmax predictions, ties toward lowest class.
int sisa_predict(const SisaEnsemble& ensemble, const std::vector<double>& features);

double sisa_evaluate(const SisaEnsemble& ensemble, const LabeledDataset& data);

/// Relabels each requested sample uniformly to one of the *other* classes
/// (deterministic from seed), then continues training model_o on the relabeled
/// full dataset for cfg.epochs.
UnlearnOutcome amnesiac_unlearn(const Model& model_o, const LabeledDataset& data,
                                const UnlearnRequest& request, const TrainConfig& cfg,
                                std::uint64_t seed);

// -- Convenience over AnyModel ------------------------------------------------

int predict_any(const AnyModel& model, const std::vector<double>& features);
double evaluate_any(const AnyModel& model, const LabeledDataset& data);

// -- Persistence (TRUVRF-SISA) --------------------------------------------------

void save_ensemble(const SisaEnsemble& ensemble, const std::filesystem::path& path);
SisaEnsemble load_ensemble(const std::filesystem::path& path);

}  // namespace truvrf
