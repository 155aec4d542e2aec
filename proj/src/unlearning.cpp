#include "truvrf/unlearning.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "truvrf/binio.hpp"

namespace truvrf {

const ModelSpec& SisaEnsemble::spec() const {
    if (shards.empty()) throw invalid_input("ensemble has no shards");
    return shards.front().sub_model.spec;
}

std::uint64_t sisa_shard_seed(std::uint64_t base_seed, int shard_id, std::uint64_t generation) {
    return mix_seed(base_seed, static_cast<std::uint64_t>(shard_id), generation);
}

namespace {

Model train_shard(const LabeledDataset& data, const SisaShard& shard, const ModelSpec& spec,
                  const TrainConfig& cfg, std::uint64_t base_seed) {
    std::uint64_t s = sisa_shard_seed(base_seed, shard.shard_id, shard.generation);
    TrainConfig shard_cfg = cfg;
    shard_cfg.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
    Model init = init_model(spec, mix_seed(s, tag_seed("init")));
    return train(init, data.subset(shard.ids), shard_cfg);
}

}  // namespace

UnlearnOutcome retrain_unlearn(const LabeledDataset& data, const UnlearnRequest& request,
                               const ModelSpec& spec, const TrainConfig& cfg,
                               std::uint64_t seed) {
    validate_request(data, request);
    LabeledDataset reduced = remove(data, request);
    if (reduced.empty()) throw invalid_input("request would empty the whole training set");
    Model init = init_model(spec, seed);
    UnlearnOutcome out;
    out.model_o = train(init, data, cfg);
    out.model_u = train(init, reduced, cfg);
    out.executed_request = request;
    return out;
}

SisaEnsemble sisa_train(const LabeledDataset& data, int k, const ModelSpec& spec,
                        const TrainConfig& cfg, std::uint64_t seed) {
    if (k < 1) throw invalid_input("k must be >= 1");
    if (data.size() < static_cast<std::size_t>(k))
        throw invalid_input("need at least one sample per shard");
    spec.validate();
    cfg.validate();

    SisaEnsemble ens;
    ens.data = data;
    ens.train_cfg = cfg;
    ens.base_seed = seed;
    ens.shards.resize(k);
    for (int i = 0; i < k; ++i) ens.shards[i].shard_id = i;

    std::vector<std::int64_t> ids;
    ids.reserve(data.size());
    for (const Sample& s : data.samples()) ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t j = 0; j < ids.size(); ++j)
        ens.shards[j % k].ids.push_back(ids[j]);

    parallel_for(k, resolve_worker_count(), [&](int i) {
        ens.shards[i].sub_model = train_shard(data, ens.shards[i], spec, cfg, seed);
    });
    return ens;
}

SisaEnsemble sisa_unlearn(const SisaEnsemble& ensemble, const UnlearnRequest& request) {
    validate_request(ensemble.data, request);
    if (request.empty()) return ensemble;

    std::set<std::int64_t> drop = request.all_ids();
    SisaEnsemble out = ensemble;
    out.data = remove(ensemble.data, request);

    std::vector<int> touched;
    for (SisaShard& shard : out.shards) {
        auto hit = std::remove_if(shard.ids.begin(), shard.ids.end(),
                                  [&](std::int64_t id) { return drop.count(id) > 0; });
        if (hit == shard.ids.end()) continue;
        shard.ids.erase(hit, shard.ids.end());
        if (shard.ids.empty())
            throw infeasible_error("request would empty shard " + std::to_string(shard.shard_id));
        ++shard.generation;
        touched.push_back(shard.shard_id);
    }

    const ModelSpec spec = ensemble.spec();
    parallel_for(static_cast<int>(touched.size()), resolve_worker_count(), [&](int t) {
        SisaShard& shard = out.shards[touched[t]];
        shard.sub_model = train_shard(out.data, shard, spec, out.train_cfg, out.base_seed);
    });
    return out;
}

int sisa_predict(const SisaEnsemble& ensemble, const std::vector<double>& features) {
    if (ensemble.shards.empty()) throw invalid_input("ensemble has no shards");
    std::map<int, int> votes;
    for (const SisaShard& shard : ensemble.shards)
        ++votes[predict_class(shard.sub_model, features)];
    int best_class = -1, best_votes = -1;
    for (const auto& [cls, n] : votes)
        if (n > best_votes) {  // map iterates ascending, so ties keep the lowest class
            best_class = cls;
            best_votes = n;
        }
    return best_class;
}

double sisa_evaluate(const SisaEnsemble& ensemble, const LabeledDataset& data) {
    if (data.empty()) throw invalid_input("cannot evaluate on an empty dataset");
    std::size_t hits = 0;
    for (const Sample& s : data.samples())
        if (sisa_predict(ensemble, s.features) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

UnlearnOutcome amnesiac_unlearn(const Model& model_o, const LabeledDataset& data,
                                const UnlearnRequest& request, const TrainConfig& cfg,
                                std::uint64_t seed) {
    validate_request(data, request);
    cfg.validate();
    int num_classes = model_o.spec.num_classes;
    if (num_classes < 2) throw invalid_input("amnesiac relabeling needs num_classes >= 2");

    std::set<std::int64_t> targets = request.all_ids();
    Rng rng(mix_seed(seed, tag_seed("relabel")));
    std::vector<Sample> relabeled = data.samples();
    for (Sample& s : relabeled) {
        if (!targets.count(s.id)) continue;
        // Uniform over the other classes: draw from [0, C-1) and skip the original.
        int draw = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1)));
        s.label = draw >= s.label ? draw + 1 : draw;
    }

    UnlearnOutcome out;
    out.model_o = model_o;
    out.model_u = train(model_o, LabeledDataset(std::move(relabeled), data.num_classes()), cfg);
    out.executed_request = request;
    return out;
}

int predict_any(const AnyModel& model, const std::vector<double>& features) {
    if (const Model* m = std::get_if<Model>(&model)) return predict_class(*m, features);
    return sisa_predict(std::get<SisaEnsemble>(model), features);
}

double evaluate_any(const AnyModel& model, const LabeledDataset& data) {
    if (const Model* m = std::get_if<Model>(&model)) return evaluate(*m, data);
    return sisa_evaluate(std::get<SisaEnsemble>(model), data);
}

// -- Persistence ---------------------------------------------------------------

namespace {
constexpr const char* kSisaMagic = "TRUVRF-SISA";
constexpr std::uint32_t kSisaVersion = 1;
}  // namespace

void save_ensemble(const SisaEnsemble& ensemble, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("cannot open " + path.string() + " for writing");
    binio::write_magic(out, kSisaMagic);
    binio::write_le<std::uint32_t>(out, kSisaVersion);
    binio::write_le<std::uint64_t>(out, ensemble.base_seed);
    binio::write_f64(out, ensemble.train_cfg.learning_rate);
    binio::write_le<std::int32_t>(out, ensemble.train_cfg.epochs);
    binio::write_le<std::int32_t>(out, ensemble.train_cfg.batch_size);
    binio::write_le<std::uint64_t>(out, ensemble.train_cfg.shuffle_seed);
    binio::write_le<std::int32_t>(out, ensemble.num_shards());
    for (const SisaShard& shard : ensemble.shards) {
        binio::write_le<std::int32_t>(out, shard.shard_id);
        binio::write_le<std::uint64_t>(out, shard.generation);
        binio::write_le<std::int64_t>(out, static_cast<std::int64_t>(shard.ids.size()));
        for (std::int64_t id : shard.ids) binio::write_le<std::int64_t>(out, id);
        write_model(out, shard.sub_model);
    }
    write_dataset(out, ensemble.data);
    if (!out) throw format_error("failed writing " + path.string());
}

SisaEnsemble load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open " + path.string());
    binio::expect_magic(in, kSisaMagic);
    std::uint32_t version = binio::read_le<std::uint32_t>(in, "ensemble version");
    if (version != kSisaVersion)
        throw format_error("unsupported ensemble version " + std::to_string(version));
    SisaEnsemble ens;
    ens.base_seed = binio::read_le<std::uint64_t>(in, "base_seed");
    ens.train_cfg.learning_rate = binio::read_f64(in, "learning_rate");
    ens.train_cfg.epochs = binio::read_le<std::int32_t>(in, "epochs");
    ens.train_cfg.batch_size = binio::read_le<std::int32_t>(in, "batch_size");
    ens.train_cfg.shuffle_seed = binio::read_le<std::uint64_t>(in, "shuffle_seed");
    std::int32_t k = binio::read_le<std::int32_t>(in, "shard count");
    if (k < 1) throw format_error("corrupt ensemble header");
    ens.shards.resize(k);
    for (SisaShard& shard : ens.shards) {
        shard.shard_id = binio::read_le<std::int32_t>(in, "shard_id");
        shard.generation = binio::read_le<std::uint64_t>(in, "generation");
        std::int64_t n = binio::read_le<std::int64_t>(in, "shard size");
        if (n < 0) throw format_error("corrupt shard header");
        shard.ids.resize(static_cast<std::size_t>(n));
        for (std::int64_t& id : shard.ids) id = binio::read_le<std::int64_t>(in, "shard id entry");
        shard.sub_model = read_model(in);
    }
    ens.data = read_dataset(in);
    return ens;
}

}  // namespace truvrf
