#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <vector>

#include "truvrf/unlearning.hpp"

using namespace truvrf;
namespace fs = std::filesystem;

namespace {

TrainConfig quick_cfg(int epochs = 8) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 32;
    return cfg;
}

std::string model_bytes(const Model& m) {
    std::ostringstream out;
    write_model(out, m);
    return out.str();
}

}  // namespace

//retrain from scratch

TEST_CASE("retrain pair shares one fresh initialization") {
    auto data = gen_synthetic(3, {40, 40, 40}, 4, 3.0, 10);
    auto req = request_random(data, {1}, 10, 3);
    auto outcome = retrain_unlearn(data, req, {4, {8}, 3}, quick_cfg(), 21);
    const Model& o = std::get<Model>(outcome.model_o);
    const Model& u = std::get<Model>(outcome.model_u);
    CHECK(o.provenance.init_seed == u.provenance.init_seed);
    CHECK(o.params != u.params);
    CHECK(outcome.executed_request == req);
}

TEST_CASE("empty retrain request reproduces model_o bit-for-bit") {
    auto data = gen_synthetic(2, {30, 30}, 3, 3.0, 4);
    auto outcome = retrain_unlearn(data, {}, {3, {4}, 2}, quick_cfg(), 9);
    CHECK(std::get<Model>(outcome.model_o) == std::get<Model>(outcome.model_u));
}

TEST_CASE("retrained model never saw the removed values") {
    auto data = gen_synthetic(2, {30, 30}, 3, 3.0, 13);
    auto req = request_random(data, {0}, 10, 7);
    auto base = retrain_unlearn(data, req, {3, {4}, 2}, quick_cfg(), 5);

    // poison exactly the requested samples; model_u must not notice
    std::vector<Sample> poisoned;
    for (const auto& s : data.samples()) {
        Sample p = s;
        if (req.all_ids().count(s.id))
            for (double& x : p.features) x = 1e6;
        poisoned.push_back(p);
    }
    auto alt = retrain_unlearn(LabeledDataset(poisoned, 2), req, {3, {4}, 2}, quick_cfg(), 5);
    CHECK(std::get<Model>(base.model_u) == std::get<Model>(alt.model_u));
    CHECK(std::get<Model>(base.model_o).params != std::get<Model>(alt.model_o).params);
}

TEST_CASE("retrain rejects emptying the whole training set") {
    auto data = gen_synthetic(2, {3, 3}, 2, 3.0, 1);
    UnlearnRequest req;
    req.ids_by_class[0] = {0, 1, 2};
    req.ids_by_class[1] = {3, 4, 5};
    CHECK_THROWS_AS(retrain_unlearn(data, req, {2, {}, 2}, quick_cfg(), 1), invalid_input);
}

TEST_CASE("full-class retrain forgets how to predict that class") {
    auto universe = gen_synthetic(5, {360, 360, 360, 360, 360}, 8, 3.0, 60);
    auto [train_pool, test_pool] =
        split_per_class(universe, {{0, 300}, {1, 300}, {2, 300}, {3, 300}, {4, 300}});
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 32;
    const auto& held_out = test_pool.ids_of_class(2);
    double recall_sum = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        auto req = request_full_class(train_pool, 2);
        auto outcome =
            retrain_unlearn(train_pool, req, {8, {32, 16}, 5}, cfg, 100 + static_cast<std::uint64_t>(seed));
        const Model& u = std::get<Model>(outcome.model_u);
        int hits = 0;
        for (auto id : held_out)
            if (predict_class(u, test_pool.by_id(id).features) == 2) ++hits;
        recall_sum += static_cast<double>(hits) / static_cast<double>(held_out.size());
    }
    CHECK(recall_sum / 10.0 <= 0.1);
}

//sisa

TEST_CASE("sisa shards round-robin by ascending id") {
    auto data = gen_synthetic(5, {500, 500, 500, 500, 500}, 4, 3.0, 17);
    auto ens = sisa_train(data, 5, {4, {8}, 5}, quick_cfg(2), 31);
    CHECK(ens.num_shards() == 5);
    std::set<std::int64_t> seen;
    for (const auto& shard : ens.shards) {
        CHECK(shard.ids.size() == 500);
        CHECK(shard.generation == 0);
        for (auto id : shard.ids) {
            CHECK(id % 5 == shard.shard_id);
            seen.insert(id);
        }
    }
    CHECK(seen.size() == data.size());
}

TEST_CASE("each sisa sub-model is the plain trainer run on its shard") {
    auto data = gen_synthetic(2, {40, 40}, 3, 3.0, 8);
    auto cfg = quick_cfg(4);
    auto ens = sisa_train(data, 4, {3, {6}, 2}, cfg, 99);
    for (const auto& shard : ens.shards) {
        auto shard_data = data.subset(shard.ids);
        std::uint64_t s = sisa_shard_seed(99, shard.shard_id, 0);
        TrainConfig c = cfg;
        c.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
        Model expect = train(init_model({3, {6}, 2}, mix_seed(s, tag_seed("init"))), shard_data, c);
        CHECK(shard.sub_model == expect);
    }
}

TEST_CASE("single-shard sisa degenerates to one monolithic model") {
    auto data = gen_synthetic(2, {25, 25}, 3, 3.0, 14);
    auto ens = sisa_train(data, 1, {3, {4}, 2}, quick_cfg(3), 55);
    CHECK(ens.num_shards() == 1);
    CHECK(ens.shards[0].ids.size() == 50);
    for (const auto& s : data.samples())
        CHECK(predict_class(ens.shards[0].sub_model, s.features) ==
              sisa_predict(ens, s.features));
}

TEST_CASE("sisa unlearning retrains only the owning shards") {
    auto data = gen_synthetic(2, {100, 100}, 3, 3.0, 26);
    auto ens = sisa_train(data, 5, {3, {6}, 2}, quick_cfg(3), 77);

    // ids 5 and 12 live in shards 0 and 2 exactly
    UnlearnRequest req;
    req.ids_by_class[data.by_id(5).label].insert(5);
    req.ids_by_class[data.by_id(12).label].insert(12);
    auto after = sisa_unlearn(ens, req);

    int retrained = 0;
    for (int i = 0; i < 5; ++i) {
        if (i == 0 || i == 2) {
            CHECK(after.shards[static_cast<std::size_t>(i)].generation == 1);
            CHECK(model_bytes(after.shards[static_cast<std::size_t>(i)].sub_model) !=
                  model_bytes(ens.shards[static_cast<std::size_t>(i)].sub_model));
            ++retrained;
        } else {
            CHECK(after.shards[static_cast<std::size_t>(i)].generation == 0);
            CHECK(model_bytes(after.shards[static_cast<std::size_t>(i)].sub_model) ==
                  model_bytes(ens.shards[static_cast<std::size_t>(i)].sub_model));
        }
    }
    CHECK(retrained == 2);
    CHECK_FALSE(after.data.contains(5));
    CHECK_FALSE(after.data.contains(12));
    CHECK(after.shards[0].ids.size() == ens.shards[0].ids.size() - 1);

    // retrained shard followed the generation-1 seed discipline
    auto shard_data = after.data.subset(after.shards[0].ids);
    std::uint64_t s = sisa_shard_seed(77, 0, 1);
    TrainConfig c = quick_cfg(3);
    c.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
    Model expect = train(init_model({3, {6}, 2}, mix_seed(s, tag_seed("init"))), shard_data, c);
    CHECK(after.shards[0].sub_model == expect);
}

TEST_CASE("empty sisa request returns the ensemble untouched") {
    auto data = gen_synthetic(2, {20, 20}, 3, 3.0, 2);
    auto ens = sisa_train(data, 2, {3, {4}, 2}, quick_cfg(2), 5);
    auto same = sisa_unlearn(ens, {});
    CHECK(same.shards == ens.shards);
}

TEST_CASE("sisa unlearning refuses to empty a shard") {
    auto data = gen_synthetic(2, {4, 4}, 2, 3.0, 3);
    auto ens = sisa_train(data, 4, {2, {}, 2}, quick_cfg(1), 1);
    UnlearnRequest req;  // every id owned by shard 0
    for (auto id : ens.shards[0].ids)
        req.ids_by_class[data.by_id(id).label].insert(id);
    CHECK_THROWS_AS(sisa_unlearn(ens, req), infeasible_error);
}

TEST_CASE("sisa unlearning validates the request against its data") {
    auto data = gen_synthetic(2, {10, 10}, 2, 3.0, 3);
    auto ens = sisa_train(data, 2, {2, {}, 2}, quick_cfg(1), 1);
    UnlearnRequest req;
    req.ids_by_class[0] = {999};
    CHECK_THROWS_AS(sisa_unlearn(ens, req), invalid_input);
}

TEST_CASE("majority vote breaks ties toward the lowest class") {
    auto data = gen_synthetic(4, {10, 10, 10, 10}, 2, 3.0, 40);
    auto ens = sisa_train(data, 2, {2, {}, 4}, quick_cfg(1), 7);
    // force a split vote: one sub-model always says 3, the other always says 1
    std::fill(ens.shards[0].sub_model.params.begin(), ens.shards[0].sub_model.params.end(), 0.0);
    ens.shards[0].sub_model.params[2 * 4 + 3] = 10.0;  // bias of class 3
    std::fill(ens.shards[1].sub_model.params.begin(), ens.shards[1].sub_model.params.end(), 0.0);
    ens.shards[1].sub_model.params[2 * 4 + 1] = 10.0;  // bias of class 1
    CHECK(sisa_predict(ens, {0.0, 0.0}) == 1);

    // unanimous vote wins outright
    ens.shards[1].sub_model.params[2 * 4 + 1] = 0.0;
    ens.shards[1].sub_model.params[2 * 4 + 3] = 10.0;
    CHECK(sisa_predict(ens, {0.0, 0.0}) == 3);
}

TEST_CASE("desk-scale sisa stays near the monolithic model") {
    auto universe = gen_synthetic(5, {250, 250, 250, 250, 250}, 8, 3.0, 70);
    auto [train_pool, test_pool] =
        split_per_class(universe, {{0, 200}, {1, 200}, {2, 200}, {3, 200}, {4, 200}});
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 32;
    double gap_sum = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        std::uint64_t s = 500 + static_cast<std::uint64_t>(seed);
        TrainConfig mono_cfg = cfg;
        mono_cfg.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
        Model mono =
            train(init_model({8, {32, 16}, 5}, mix_seed(s, tag_seed("init"))), train_pool, mono_cfg);
        auto ens = sisa_train(train_pool, 5, {8, {32, 16}, 5}, cfg, s);
        gap_sum += evaluate(mono, test_pool) - sisa_evaluate(ens, test_pool);
    }
    CHECK(gap_sum / 10.0 <= 0.10);
}

//amnesiac

TEST_CASE("amnesiac with nothing to forget and no extra epochs is the identity") {
    auto data = gen_synthetic(2, {20, 20}, 3, 3.0, 19);
    Model o = train(init_model({3, {4}, 2}, 2), data, quick_cfg(3));
    TrainConfig zero = quick_cfg(0);
    auto outcome = amnesiac_unlearn(o, data, {}, zero, 4);
    CHECK(std::get<Model>(outcome.model_u) == o);
}

TEST_CASE("amnesiac continues training from the origin parameters") {
    // Three classes so the relabel draw has a real choice; with two classes
    // every requested sample deterministically flips to the only other label.
    auto data = gen_synthetic(3, {30, 30, 30}, 3, 3.0, 23);
    Model o = train(init_model({3, {4}, 3}, 6), data, quick_cfg(4));
    auto req = request_random(data, {0}, 10, 2);
    auto outcome = amnesiac_unlearn(o, data, req, quick_cfg(4), 8);
    const Model& u = std::get<Model>(outcome.model_u);
    CHECK(u.provenance.init_seed == o.provenance.init_seed);
    CHECK(u.provenance.sgd_steps > o.provenance.sgd_steps);
    CHECK(outcome.executed_request == req);
    CHECK(std::get<Model>(outcome.model_o) == o);

    auto again = amnesiac_unlearn(o, data, req, quick_cfg(4), 8);
    CHECK(std::get<Model>(again.model_u) == u);
    auto other_seed = amnesiac_unlearn(o, data, req, quick_cfg(4), 9);
    CHECK(std::get<Model>(other_seed.model_u).params != u.params);
}

TEST_CASE("amnesiac crushes accuracy on the forgotten samples") {
    // Overlapping clusters plus a wide net push the origin model into
    // memorization, so continued training on relabeled points actually flips
    // them instead of being anchored by the surviving class data.
    auto data = gen_synthetic(5, {200, 200, 200, 200, 200}, 8, 2.0, 81);
    TrainConfig cfg;
    cfg.epochs = 120;
    cfg.learning_rate = 0.15;
    cfg.batch_size = 32;
    TrainConfig continue_cfg = cfg;
    continue_cfg.epochs = 60;
    double drop_sum = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        std::uint64_t s = 900 + static_cast<std::uint64_t>(seed);
        TrainConfig train_cfg = cfg;
        train_cfg.shuffle_seed = mix_seed(s, tag_seed("shuffle"));
        Model o = train(init_model({8, {96, 48}, 5}, mix_seed(s, tag_seed("init"))), data, train_cfg);
        auto req = request_random(data, {3}, 100, s);
        auto outcome = amnesiac_unlearn(o, data, req, continue_cfg, s);
        const Model& u = std::get<Model>(outcome.model_u);
        int o_hits = 0, u_hits = 0;
        for (auto id : req.ids_by_class[3]) {
            if (predict_class(o, data.by_id(id).features) == 3) ++o_hits;
            if (predict_class(u, data.by_id(id).features) == 3) ++u_hits;
        }
        drop_sum += (o_hits - u_hits) / 100.0;
    }
    CHECK(drop_sum / 10.0 >= 0.30);
}

//any-model helpers

TEST_CASE("variant helpers dispatch to the right implementation") {
    auto data = gen_synthetic(2, {20, 20}, 3, 3.0, 31);
    Model m = train(init_model({3, {4}, 2}, 1), data, quick_cfg(3));
    auto ens = sisa_train(data, 2, {3, {4}, 2}, quick_cfg(3), 1);
    AnyModel am = m;
    AnyModel ae = ens;
    CHECK(predict_any(am, data.at(0).features) == predict_class(m, data.at(0).features));
    CHECK(predict_any(ae, data.at(0).features) == sisa_predict(ens, data.at(0).features));
    CHECK(evaluate_any(am, data) == evaluate(m, data));
    CHECK(evaluate_any(ae, data) == sisa_evaluate(ens, data));
}

//persistence

TEST_CASE("ensemble files round-trip every shard and the embedded data") {
    auto data = gen_synthetic(3, {15, 15, 15}, 4, 3.0, 44);
    auto ens = sisa_train(data, 3, {4, {5}, 3}, quick_cfg(2), 12);
    auto req = request_random(data, {1}, 4, 6);
    ens = sisa_unlearn(ens, req);

    auto path = fs::temp_directory_path() / "truvrf_test_ensemble.bin";
    save_ensemble(ens, path);
    auto back = load_ensemble(path);
    CHECK(back.base_seed == ens.base_seed);
    CHECK(back.shards == ens.shards);
    CHECK(back.data.size() == ens.data.size());
    CHECK(back.train_cfg.epochs == ens.train_cfg.epochs);

    // further unlearning after reload stays well-defined
    auto req2 = request_random(back.data, {0}, 3, 9);
    auto direct = sisa_unlearn(ens, req2);
    auto reloaded = sisa_unlearn(back, req2);
    CHECK(direct.shards == reloaded.shards);
    fs::remove(path);
}

TEST_CASE("ensemble loader rejects model files") {
    auto path = fs::temp_directory_path() / "truvrf_test_notens.bin";
    save_model(init_model({2, {}, 2}, 1), path);
    CHECK_THROWS_AS(load_ensemble(path), format_error);
    fs::remove(path);
}
