#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "truvrf/harness.hpp"
#include "truvrf/metrics.hpp"

using namespace truvrf;

namespace {

TrainConfig desk_cfg() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 32;
    return cfg;
}

// 500 train + 150 test per class, the scale every battery defaults to.
struct DeskTask {
    LabeledDataset train_pool;
    LabeledDataset test_pool;
    ModelSpec spec{8, {32, 16}, 5};

    explicit DeskTask(std::uint64_t seed) {
        auto universe = gen_synthetic(5, {650, 650, 650, 650, 650}, 8, 3.0, seed);
        auto parts =
            split_per_class(universe, {{0, 500}, {1, 500}, {2, 500}, {3, 500}, {4, 500}});
        train_pool = parts.first;
        test_pool = parts.second;
    }
};

}  // namespace

//metric I: which classes

TEST_CASE("an untouched model yields exactly zero relative change") {
    auto data = gen_synthetic(3, {40, 40, 40}, 4, 3.0, 3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.1;
    Model m = train(init_model({4, {6}, 3}, 2), data, cfg);
    auto aux = make_auxiliary(data, 10, AuxSource::TestData, 4);

    auto verdict = verify_class(m, m, aux, 0.01, 0.5);
    for (const auto& [label, entry] : verdict.per_class) {
        CHECK(entry.relative_change == 0.0);
        CHECK(entry.ds == 0.0);
        CHECK_FALSE(entry.unlearned);
    }
    CHECK(verdict.flagged_classes().empty());
}

TEST_CASE("zero threshold flags every nonzero change") {
    DeskTask task(11);
    auto req = request_full_class(task.train_pool, 1);
    auto outcome = retrain_unlearn(task.train_pool, req, task.spec, desk_cfg(), 7);
    auto aux = make_auxiliary(task.test_pool, 50, AuxSource::TestData, 5);
    auto verdict = verify_class(outcome.model_o, outcome.model_u, aux, 0.01, 0.0);
    for (const auto& [label, entry] : verdict.per_class) {
        CHECK(entry.relative_change > 0.0);
        CHECK(entry.unlearned);
    }
}

TEST_CASE("full-class removal stands out against bystander drift") {
    DeskTask task(12);
    auto req = request_full_class(task.train_pool, 2);
    auto outcome = retrain_unlearn(task.train_pool, req, task.spec, desk_cfg(), 19);
    auto aux = make_auxiliary(task.test_pool, 50, AuxSource::TestData, 6);
    auto verdict = verify_class(outcome.model_o, outcome.model_u, aux, 0.01, 1.5);
    CHECK(verdict.flagged_classes() == std::vector<int>{2});
    CHECK(verdict.per_class.at(2).ds > 0.0);
    CHECK_THROWS_AS(verify_class(outcome.model_o, outcome.model_u, aux, 0.01, -0.1),
                    invalid_input);
}

TEST_CASE("verdicts refuse models of different shapes") {
    auto data = gen_synthetic(2, {30, 30}, 3, 3.0, 9);
    TrainConfig cfg;
    cfg.epochs = 3;
    Model a = train(init_model({3, {4}, 2}, 1), data, cfg);
    Model b = train(init_model({3, {5}, 2}, 1), data, cfg);
    auto ens = sisa_train(data, 2, {3, {4}, 2}, cfg, 1);
    auto ens3 = sisa_train(data, 3, {3, {4}, 2}, cfg, 1);
    auto aux = make_auxiliary(data, 8, AuxSource::TestData, 2);
    CHECK_THROWS_AS(verify_class(AnyModel{a}, AnyModel{b}, aux, 0.01, 0.5), invalid_input);
    CHECK_THROWS_AS(verify_class(AnyModel{a}, AnyModel{ens}, aux, 0.01, 0.5), invalid_input);
    CHECK_THROWS_AS(verify_class(AnyModel{ens}, AnyModel{ens3}, aux, 0.01, 0.5), invalid_input);
}

TEST_CASE("desk-scale honest unlearning moves the target's sensitivity upward") {
    DeskTask task(13);
    auto aux = make_auxiliary(task.test_pool, 50, AuxSource::TestData, 7);
    int positive = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        std::uint64_t seed = mix_seed(999, static_cast<std::uint64_t>(t));
        int target = static_cast<int>(seed % 5);
        auto req = request_full_class(task.train_pool, target);
        auto outcome = retrain_unlearn(task.train_pool, req, task.spec, desk_cfg(), seed);
        auto prof_o = extract_sensitivity(outcome.model_o, aux, 0.01);
        auto prof_u = extract_sensitivity(outcome.model_u, aux, 0.01);
        if (sensitivity_difference(prof_u, prof_o).at(target) > 0.0) ++positive;
    }
    CHECK(positive >= 45);
}

//metric II: how much

TEST_CASE("inferred volume quantizes upward in whole batches") {
    CHECK(quantized_volume(5.0, 2.0, 100) == 300);
    CHECK(quantized_volume(2.0, 2.0, 100) == 100);
    CHECK(quantized_volume(2.1, 2.0, 100) == 200);
    CHECK(quantized_volume(0.0, 2.0, 100) == 0);
    CHECK(quantized_volume(-3.0, 2.0, 100) == 0);
    CHECK_THROWS_AS(quantized_volume(1.0, 0.0, 100), invalid_input);
    CHECK_THROWS_AS(quantized_volume(1.0, 1.0, 0), invalid_input);
}

TEST_CASE("deviation is the relative distance to the true volume") {
    CHECK(deviation(500, 470) == doctest::Approx(0.06));
    CHECK(deviation(1000, 1000) == 0.0);
    CHECK(deviation(1000, 1300) == doctest::Approx(0.3));
    CHECK_THROWS_AS(deviation(0, 100), invalid_input);
}

TEST_CASE("shadow sweep internals stay consistent with its formula") {
    auto universe = gen_synthetic(3, {240, 200, 200}, 6, 3.0, 31);
    auto [train_pool, test_pool] = split_per_class(universe, {{0, 160}, {1, 160}, {2, 160}});
    auto target = train_pool.subset(
        std::vector<std::int64_t>(train_pool.ids_of_class(0).begin(),
                                  train_pool.ids_of_class(0).end()));
    std::vector<std::int64_t> other_ids;
    for (int c : {1, 2})
        other_ids.insert(other_ids.end(), train_pool.ids_of_class(c).begin(),
                         train_pool.ids_of_class(c).end());
    auto others = train_pool.subset(other_ids);
    auto aux = make_auxiliary(test_pool, 30, AuxSource::TestData, 3);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 32;

    auto um = build_unlearning_measurement(target, others, {6, {16}, 3}, cfg, 4, 40, aux, 0.01, 5);
    CHECK(um.shadow_count == 4);
    CHECK(um.batch_volume == 40);
    CHECK(um.target_class == 0);
    CHECK(um.shadow_ms.size() == 4);
    CHECK(um.um_batch ==
          doctest::Approx((um.shadow_ms.front() - um.shadow_ms.back()) / 3.0));
    CHECK(um.um_batch > 0.0);

    auto um2 = build_unlearning_measurement(target, others, {6, {16}, 3}, cfg, 2, 40, aux, 0.01, 5);
    CHECK(um2.um_batch ==
          doctest::Approx(std::abs(um2.shadow_ms[0] - um2.shadow_ms[1])));

    CHECK_THROWS_AS(build_unlearning_measurement(target, others, {6, {16}, 3}, cfg, 1, 40, aux,
                                                 0.01, 5),
                    invalid_input);
    CHECK_THROWS_AS(build_unlearning_measurement(target, others, {6, {16}, 3}, cfg, 5, 40, aux,
                                                 0.01, 5),
                    invalid_input);  // pool of 160 < 5*40
    CHECK_THROWS_AS(build_unlearning_measurement(train_pool, others, {6, {16}, 3}, cfg, 2, 40,
                                                 aux, 0.01, 5),
                    invalid_input);  // multi-class target pool
}

TEST_CASE("a sweep that rises with volume fails calibration loudly") {
    // Every training point is the same x=+1 labeled 0, and batch_size equals
    // the batch volume, so shadow j runs exactly j optimizer steps per epoch.
    // Probes sit at x=-2 with label 0: each step moves -2*w0+b0 down and
    // -2*w1+b1 up, so the model grows strictly more confidently wrong about
    // the probes the longer it trains.  MS therefore rises with volume and
    // the decreasing-sweep premise breaks for every seed.
    std::vector<Sample> target_samples, probe_samples;
    std::int64_t id = 0;
    for (int i = 0; i < 90; ++i) target_samples.push_back({id++, {1.0}, 0});
    for (int i = 0; i < 30; ++i) probe_samples.push_back({id++, {-2.0}, 0});
    LabeledDataset target(target_samples, 2);
    LabeledDataset others(std::vector<Sample>{}, 2);
    AuxiliaryData aux;
    aux.source = AuxSource::TestData;
    aux.per_class_count = 30;
    aux.slices[0] = LabeledDataset(probe_samples, 2);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.learning_rate = 0.2;
    cfg.batch_size = 30;

    CHECK_THROWS_AS(build_unlearning_measurement(target, others, {1, {}, 2}, cfg, 3, 30, aux,
                                                 0.01, 7),
                    calibration_error);
}

TEST_CASE("desk-scale shadow sweeps calibrate positive nearly always") {
    DeskTask task(14);
    auto aux = make_auxiliary(task.test_pool, 50, AuxSource::TestData, 8);
    auto target = task.train_pool.subset(
        std::vector<std::int64_t>(task.train_pool.ids_of_class(2).begin(),
                                  task.train_pool.ids_of_class(2).end()));
    std::vector<std::int64_t> other_ids;
    for (int c : {0, 1, 3, 4})
        other_ids.insert(other_ids.end(), task.train_pool.ids_of_class(c).begin(),
                         task.train_pool.ids_of_class(c).end());
    auto others = task.train_pool.subset(other_ids);

    int positive = 0;
    for (int seed = 0; seed < 20; ++seed) {
        try {
            auto um = build_unlearning_measurement(target, others, task.spec, desk_cfg(), 5, 100,
                                                   aux, 0.01,
                                                   mix_seed(777, static_cast<std::uint64_t>(seed)));
            if (um.um_batch > 0.0) ++positive;
        } catch (const calibration_error&) {
        }
    }
    CHECK(positive >= 18);
}

TEST_CASE("volume verification recovers an untouched model as zero") {
    auto data = gen_synthetic(2, {80, 80}, 3, 3.0, 23);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.1;
    Model m = train(init_model({3, {6}, 2}, 3), data, cfg);
    auto aux = make_auxiliary(data, 20, AuxSource::TestData, 6);
    UnlearningMeasurement um;
    um.target_class = 0;
    um.um_batch = 2.0;
    um.batch_volume = 100;
    um.shadow_count = 2;
    um.shadow_ms = {6.0, 4.0};

    auto est = verify_volume(m, m, um, aux, 0.01);
    CHECK(est.ds == 0.0);
    CHECK(est.inferred_volume == 0);

    um.um_batch = 0.0;
    CHECK_THROWS_AS(verify_volume(m, m, um, aux, 0.01), invalid_input);
    um.um_batch = 2.0;
    um.target_class = 7;
    CHECK_THROWS_AS(verify_volume(m, m, um, aux, 0.01), invalid_input);
}

TEST_CASE("measurements round-trip through json") {
    UnlearningMeasurement um;
    um.target_class = 3;
    um.um_batch = 1.75;
    um.batch_volume = 100;
    um.shadow_count = 4;
    um.shadow_ms = {10.0, 8.5, 7.5, 4.75};
    auto back = measurement_from_json(measurement_to_json(um));
    CHECK(back.target_class == um.target_class);
    CHECK(back.um_batch == um.um_batch);
    CHECK(back.batch_volume == um.batch_volume);
    CHECK(back.shadow_count == um.shadow_count);
    CHECK(back.shadow_ms == um.shadow_ms);
    CHECK_THROWS_AS(measurement_from_json("not json"), format_error);
    CHECK_THROWS_AS(measurement_from_json("{\"um_batch\": 1.0}"), format_error);
}

//metric III: which samples

TEST_CASE("identical probe sets produce a zero gap and an honest verdict") {
    auto data = gen_synthetic(2, {40, 40}, 3, 3.0, 29);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.1;
    Model m = train(init_model({3, {5}, 2}, 4), data, cfg);
    auto req = request_random(data, {1}, 10, 2);
    auto tar = make_target_auxiliary(data, req, 10, 3);
    AuxiliaryData tst = tar;
    tst.source = AuxSource::TestData;

    auto verdict = verify_sample(AnyModel{m}, tar, tst, 0.01, 0.1);
    CHECK(verdict.gap_ratio == 0.0);
    CHECK(verdict.honest);
    CHECK(verdict.ms_u_tar == verdict.ms_u_test);
}

TEST_CASE("sample verification rejects mismatched probe pairs") {
    auto data = gen_synthetic(2, {40, 40}, 3, 3.0, 37);
    TrainConfig cfg;
    cfg.epochs = 3;
    Model m = train(init_model({3, {5}, 2}, 4), data, cfg);
    auto req = request_random(data, {1}, 10, 2);
    auto tar = make_target_auxiliary(data, req, 10, 3);
    auto tst = make_auxiliary(data, 10, AuxSource::TestData, 5);

    // swapped sources
    CHECK_THROWS_AS(verify_sample(AnyModel{m}, tst, tst, 0.01, 0.1), invalid_input);
    AuxiliaryData bad_source = tar;
    bad_source.source = AuxSource::TargetData;
    CHECK_THROWS_AS(verify_sample(AnyModel{m}, tar, bad_source, 0.01, 0.1), invalid_input);

    // class sets differ: tst covers both classes, tar only class 1
    CHECK_THROWS_AS(verify_sample(AnyModel{m}, tar, tst, 0.01, 0.1), invalid_input);

    // probe sizes differ
    auto small = make_auxiliary(data.subset(data.ids_of_class(1)), 8, AuxSource::TestData, 5);
    CHECK_THROWS_AS(verify_sample(AnyModel{m}, tar, small, 0.01, 0.1), invalid_input);
}

TEST_CASE("retained target data probes flatter than held-out data") {
    auto universe = gen_synthetic(5, {450, 450, 450, 450, 450}, 8, 2.0, 15);
    auto [train_pool, test_pool] =
        split_per_class(universe, {{0, 300}, {1, 300}, {2, 300}, {3, 300}, {4, 300}});
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.learning_rate = 0.15;
    cfg.batch_size = 32;
    cfg.shuffle_seed = 9;
    Model m = train(init_model({8, {96, 48}, 5}, 6), train_pool, cfg);

    auto req = request_random(train_pool, {2}, 150, 4);
    auto tar = make_target_auxiliary(train_pool, req, 50, 5);
    auto test_slice = test_pool.subset(test_pool.ids_of_class(2));
    auto tst = make_auxiliary(test_slice, 50, AuxSource::TestData, 6);

    // the model memorized the target samples it never unlearned
    auto verdict = verify_sample(AnyModel{m}, tar, tst, 0.01, 0.3);
    CHECK(verdict.ms_u_tar < verdict.ms_u_test);
    CHECK(verdict.gap_ratio > 0.3);
    CHECK_FALSE(verdict.honest);
}

//percentiles

TEST_CASE("tau percentile uses the nearest rank") {
    std::vector<double> gaps;
    for (int i = 1; i <= 20; ++i) gaps.push_back(0.01 * i);
    CHECK(percentile95_nearest_rank(gaps) == doctest::Approx(0.19));

    CHECK(percentile95_nearest_rank({0.0, 0.0, 0.0}) == 0.0);
    CHECK(percentile95_nearest_rank({0.42}) == 0.42);
    std::vector<double> reversed{0.3, 0.2, 0.1};
    CHECK(percentile95_nearest_rank(reversed) == doctest::Approx(0.3));
    CHECK_THROWS_AS(percentile95_nearest_rank({}), invalid_input);
}

//serialized verdict views

TEST_CASE("verdict json views carry every reported field") {
    auto data = gen_synthetic(2, {30, 30}, 3, 3.0, 43);
    TrainConfig cfg;
    cfg.epochs = 4;
    Model m = train(init_model({3, {4}, 2}, 2), data, cfg);
    auto aux = make_auxiliary(data, 8, AuxSource::TestData, 3);

    auto verdict = verify_class(m, m, aux, 0.01, 0.5);
    auto text = class_verdict_to_json(verdict);
    CHECK(text.find("\"relative_change\"") != std::string::npos);
    CHECK(text.find("\"threshold\"") != std::string::npos);

    UnlearningMeasurement um;
    um.target_class = 0;
    um.um_batch = 1.0;
    um.batch_volume = 10;
    um.shadow_count = 2;
    um.shadow_ms = {2.0, 1.0};
    auto est = verify_volume(m, m, um, aux, 0.01);
    CHECK(volume_estimate_to_json(est).find("\"inferred_volume\"") != std::string::npos);

    auto req = request_random(data, {0}, 5, 1);
    auto tar = make_target_auxiliary(data, req, 5, 2);
    auto tst_pool = data.subset(data.ids_of_class(0));
    auto tst = make_auxiliary(tst_pool, 5, AuxSource::TestData, 4);
    auto sv = verify_sample(AnyModel{m}, tar, tst, 0.01, 0.1);
    CHECK(sample_verdict_to_json(sv).find("\"gap_ratio\"") != std::string::npos);
}
