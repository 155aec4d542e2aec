// Python bindings for the verification toolkit's main operations: dataset
// construction, model training, the three unlearning frameworks, adversarial
// server behaviors, sensitivity probes, the three audit metrics, and the
// scenario benchmark harness (JSON in, JSON out).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "truvrf/harness.hpp"

namespace py = pybind11;
using namespace truvrf;

namespace {

// Heavy calls run pure C++ (threads included), so they drop the GIL.
using nogil = py::call_guard<py::gil_scoped_release>;

}  // namespace

PYBIND11_MODULE(_truvrf, m) {
    m.doc() = "model-sensitivity verification for machine unlearning";

    py::register_exception<invalid_input>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<format_error>(m, "FormatError", PyExc_ValueError);
    py::register_exception<infeasible_error>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<calibration_error>(m, "CalibrationError", PyExc_RuntimeError);

    // ---- datasets and requests ----
    py::class_<Sample>(m, "Sample")
        .def(py::init<std::int64_t, std::vector<double>, int>(), py::arg("id"),
             py::arg("features"), py::arg("label"))
        .def_readwrite("id", &Sample::id)
        .def_readwrite("features", &Sample::features)
        .def_readwrite("label", &Sample::label);

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def(py::init<std::vector<Sample>, int>(), py::arg("samples"), py::arg("num_classes"))
        .def("__len__", &LabeledDataset::size)
        .def("num_classes", &LabeledDataset::num_classes)
        .def("feature_dim", &LabeledDataset::feature_dim)
        .def("samples", &LabeledDataset::samples)
        .def("class_count", &LabeledDataset::class_count, py::arg("label"))
        .def("ids_of_class", &LabeledDataset::ids_of_class, py::arg("label"))
        .def("contains", &LabeledDataset::contains, py::arg("id"))
        .def("by_id", &LabeledDataset::by_id, py::arg("id"))
        .def("subset", &LabeledDataset::subset, py::arg("ids"));

    py::class_<UnlearnRequest>(m, "UnlearnRequest")
        .def(py::init<>())
        .def_readwrite("ids_by_class", &UnlearnRequest::ids_by_class)
        .def("empty", &UnlearnRequest::empty)
        .def("volume", &UnlearnRequest::volume, py::arg("label"))
        .def("total_volume", &UnlearnRequest::total_volume)
        .def("all_ids", &UnlearnRequest::all_ids)
        .def("classes", &UnlearnRequest::classes)
        .def("__eq__", [](const UnlearnRequest& a, const UnlearnRequest& b) { return a == b; });

    m.def("gen_synthetic", &gen_synthetic, py::arg("num_classes"), py::arg("per_class"),
          py::arg("dim"), py::arg("separation"), py::arg("seed"), nogil());
    m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"), nogil());
    m.def("save_dataset", &save_dataset, py::arg("data"), py::arg("path"), nogil());
    m.def("load_dataset", &load_dataset, py::arg("path"), nogil());
    m.def("split_per_class", &split_per_class, py::arg("data"), py::arg("head_count"));
    m.def("remove", &truvrf::remove, py::arg("data"), py::arg("request"));
    m.def("request_full_class", &request_full_class, py::arg("data"), py::arg("label"));
    m.def("request_random", &request_random, py::arg("data"), py::arg("labels"),
          py::arg("volume_per_class"), py::arg("seed"));
    m.def("sample_disjoint", &sample_disjoint, py::arg("data"), py::arg("request"),
          py::arg("seed"));
    m.def("validate_request", &validate_request, py::arg("data"), py::arg("request"));

    // ---- models and training ----
    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init<int, std::vector<int>, int>(), py::arg("input_dim"),
             py::arg("hidden_layers"), py::arg("num_classes"))
        .def_readwrite("input_dim", &ModelSpec::input_dim)
        .def_readwrite("hidden_layers", &ModelSpec::hidden_layers)
        .def_readwrite("num_classes", &ModelSpec::num_classes)
        .def("parameter_count", &ModelSpec::parameter_count)
        .def("__eq__", [](const ModelSpec& a, const ModelSpec& b) { return a == b; });

    py::class_<Provenance>(m, "Provenance")
        .def_readonly("init_seed", &Provenance::init_seed)
        .def_readonly("sgd_steps", &Provenance::sgd_steps);

    py::class_<Model>(m, "Model")
        .def_readonly("spec", &Model::spec)
        .def_readonly("params", &Model::params)
        .def_readonly("provenance", &Model::provenance)
        .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](double lr, int epochs, int batch_size, std::uint64_t shuffle_seed) {
                 return TrainConfig{lr, epochs, batch_size, shuffle_seed};
             }),
             py::arg("learning_rate") = 0.1, py::arg("epochs") = 1, py::arg("batch_size") = 32,
             py::arg("shuffle_seed") = 0)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed);

    m.def("init_model", &init_model, py::arg("spec"), py::arg("seed"));
    m.def("train", &train, py::arg("model"), py::arg("data"), py::arg("cfg"), nogil());
    m.def("evaluate", &evaluate, py::arg("model"), py::arg("data"), nogil());
    m.def("predict_class", &predict_class, py::arg("model"), py::arg("features"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"), nogil());
    m.def("load_model", &load_model, py::arg("path"), nogil());
    m.def("mix_seed", py::overload_cast<std::uint64_t, std::uint64_t>(&mix_seed),
          py::arg("seed"), py::arg("stream"));
    m.def("tag_seed", &tag_seed, py::arg("tag"));

    // ---- unlearning frameworks ----
    py::class_<SisaShard>(m, "SisaShard")
        .def_readonly("shard_id", &SisaShard::shard_id)
        .def_readonly("ids", &SisaShard::ids)
        .def_readonly("generation", &SisaShard::generation)
        .def_readonly("sub_model", &SisaShard::sub_model);

    py::class_<SisaEnsemble>(m, "SisaEnsemble")
        .def_readonly("base_seed", &SisaEnsemble::base_seed)
        .def_readonly("shards", &SisaEnsemble::shards)
        .def("num_shards", &SisaEnsemble::num_shards)
        .def("spec", &SisaEnsemble::spec);

    py::class_<UnlearnOutcome>(m, "UnlearnOutcome")
        .def_readonly("model_o", &UnlearnOutcome::model_o)
        .def_readonly("model_u", &UnlearnOutcome::model_u)
        .def_readonly("executed_request", &UnlearnOutcome::executed_request);

    m.def("retrain_unlearn", &retrain_unlearn, py::arg("data"), py::arg("request"),
          py::arg("spec"), py::arg("cfg"), py::arg("seed"), nogil());
    m.def("sisa_train", &sisa_train, py::arg("data"), py::arg("k"), py::arg("spec"),
          py::arg("cfg"), py::arg("base_seed"), nogil());
    m.def("sisa_unlearn", &sisa_unlearn, py::arg("ensemble"), py::arg("request"), nogil());
    m.def("sisa_predict", &sisa_predict, py::arg("ensemble"), py::arg("features"));
    m.def("sisa_evaluate", &sisa_evaluate, py::arg("ensemble"), py::arg("data"), nogil());
    m.def("amnesiac_unlearn", &amnesiac_unlearn, py::arg("model_o"), py::arg("data"),
          py::arg("request"), py::arg("cfg"), py::arg("seed"), nogil());
    m.def("predict_any", &predict_any, py::arg("model"), py::arg("features"));
    m.def("evaluate_any", &evaluate_any, py::arg("model"), py::arg("data"), nogil());
    m.def("save_ensemble", &save_ensemble, py::arg("ensemble"), py::arg("path"), nogil());
    m.def("load_ensemble", &load_ensemble, py::arg("path"), nogil());

    // ---- server behaviors ----
    py::class_<ServerBehavior>(m, "ServerBehavior")
        .def(py::init([](const std::string& kind, double keep_fraction, std::uint64_t seed) {
                 return ServerBehavior{server_kind_from_string(kind), keep_fraction, seed};
             }),
             py::arg("kind"), py::arg("keep_fraction") = 0.0, py::arg("seed") = 0)
        .def_property_readonly(
            "kind", [](const ServerBehavior& b) { return to_string(b.kind); })
        .def_readwrite("keep_fraction", &ServerBehavior::keep_fraction)
        .def_readwrite("seed", &ServerBehavior::seed);

    m.def("apply_behavior", &apply_behavior, py::arg("request"), py::arg("behavior"),
          py::arg("data"));

    // ---- sensitivity probes ----
    py::class_<AuxiliaryData>(m, "AuxiliaryData")
        .def_property_readonly(
            "source", [](const AuxiliaryData& a) { return to_string(a.source); })
        .def_readonly("per_class_count", &AuxiliaryData::per_class_count)
        .def("classes", &AuxiliaryData::classes);

    m.def(
        "make_auxiliary",
        [](const LabeledDataset& data, int per_class_count, const std::string& source,
           std::uint64_t seed) {
            return make_auxiliary(data, per_class_count, aux_source_from_string(source), seed);
        },
        py::arg("data"), py::arg("per_class_count"), py::arg("source"), py::arg("seed"));
    m.def("make_target_auxiliary", &make_target_auxiliary, py::arg("data"), py::arg("request"),
          py::arg("per_class_count"), py::arg("seed"));

    py::class_<SensitivityProfile>(m, "SensitivityProfile")
        .def_readonly("ms", &SensitivityProfile::ms)
        .def_readonly("alpha", &SensitivityProfile::alpha)
        .def_readonly("probe_passes", &SensitivityProfile::probe_passes)
        .def("at", &SensitivityProfile::at, py::arg("label"))
        .def("total", &SensitivityProfile::total);

    m.def(
        "extract_sensitivity",
        [](const AnyModel& model, const AuxiliaryData& aux, double alpha, int probe_passes) {
            return extract_sensitivity(model, aux, alpha, probe_passes);
        },
        py::arg("model"), py::arg("aux"), py::arg("alpha"), py::arg("probe_passes") = 1,
        nogil());
    m.def("sensitivity_difference", &sensitivity_difference, py::arg("profile_u"),
          py::arg("profile_o"));

    // ---- the three audit metrics ----
    py::class_<ClassVerdict::PerClass>(m, "ClassChange")
        .def_readonly("ms_o", &ClassVerdict::PerClass::ms_o)
        .def_readonly("ms_u", &ClassVerdict::PerClass::ms_u)
        .def_readonly("ds", &ClassVerdict::PerClass::ds)
        .def_readonly("relative_change", &ClassVerdict::PerClass::relative_change)
        .def_readonly("unlearned", &ClassVerdict::PerClass::unlearned);

    py::class_<ClassVerdict>(m, "ClassVerdict")
        .def_readonly("per_class", &ClassVerdict::per_class)
        .def_readonly("threshold", &ClassVerdict::threshold)
        .def("flagged_classes", &ClassVerdict::flagged_classes)
        .def("to_json", [](const ClassVerdict& v) { return class_verdict_to_json(v); });

    m.def("verify_class", &verify_class, py::arg("model_o"), py::arg("model_u"),
          py::arg("test_aux"), py::arg("alpha"), py::arg("threshold"),
          py::arg("probe_passes") = 1, nogil());

    py::class_<UnlearningMeasurement>(m, "UnlearningMeasurement")
        .def_readonly("target_class", &UnlearningMeasurement::target_class)
        .def_readonly("um_batch", &UnlearningMeasurement::um_batch)
        .def_readonly("batch_volume", &UnlearningMeasurement::batch_volume)
        .def_readonly("shadow_count", &UnlearningMeasurement::shadow_count)
        .def_readonly("shadow_ms", &UnlearningMeasurement::shadow_ms)
        .def("to_json", [](const UnlearningMeasurement& um) { return measurement_to_json(um); });

    m.def(
        "build_unlearning_measurement",
        [](const LabeledDataset& target_class_data, const LabeledDataset& other_class_data,
           const ModelSpec& spec, const TrainConfig& cfg, int n, int batch_volume,
           const AuxiliaryData& test_aux, double alpha, std::uint64_t seed, int probe_passes) {
            return build_unlearning_measurement(target_class_data, other_class_data, spec, cfg,
                                                n, batch_volume, test_aux, alpha, seed,
                                                probe_passes);
        },
        py::arg("target_class_data"), py::arg("other_class_data"), py::arg("spec"),
        py::arg("cfg"), py::arg("n"), py::arg("batch_volume"), py::arg("test_aux"),
        py::arg("alpha"), py::arg("seed"), py::arg("probe_passes") = 1, nogil());
    m.def("measurement_from_json", &measurement_from_json, py::arg("text"));

    py::class_<VolumeEstimate>(m, "VolumeEstimate")
        .def_readonly("target_class", &VolumeEstimate::target_class)
        .def_readonly("ds", &VolumeEstimate::ds)
        .def_readonly("inferred_volume", &VolumeEstimate::inferred_volume)
        .def_readonly("deviation", &VolumeEstimate::deviation)
        .def("to_json", [](const VolumeEstimate& e) { return volume_estimate_to_json(e); });

    m.def("quantized_volume", &quantized_volume, py::arg("ds"), py::arg("um_batch"),
          py::arg("batch_volume"));
    m.def("verify_volume", &verify_volume, py::arg("model_o"), py::arg("model_u"), py::arg("um"),
          py::arg("target_aux"), py::arg("alpha"), py::arg("probe_passes") = 1, nogil());
    m.def("deviation", &deviation, py::arg("true_volume"), py::arg("inferred_volume"));

    py::class_<SampleVerdict>(m, "SampleVerdict")
        .def_readonly("ms_u_test", &SampleVerdict::ms_u_test)
        .def_readonly("ms_u_tar", &SampleVerdict::ms_u_tar)
        .def_readonly("gap_ratio", &SampleVerdict::gap_ratio)
        .def_readonly("honest", &SampleVerdict::honest)
        .def_readonly("tau", &SampleVerdict::tau)
        .def("to_json", [](const SampleVerdict& v) { return sample_verdict_to_json(v); });

    m.def("verify_sample", &verify_sample, py::arg("model_u"), py::arg("target_aux"),
          py::arg("test_aux"), py::arg("alpha"), py::arg("tau"), py::arg("probe_passes") = 1,
          nogil());

    // ---- benchmark harness (JSON in, JSON out) ----
    m.def("default_scenario_json", [] { return scenario_to_json(default_scenario()); });
    m.def(
        "run_benchmark_json",
        [](const std::string& config_text) {
            return report_to_json(run_benchmark(scenario_from_json(config_text)));
        },
        py::arg("config_text"), nogil());
    m.def(
        "calibrate_tau",
        [](const std::string& config_text, int honest_runs) {
            return calibrate_tau(scenario_from_json(config_text), honest_runs);
        },
        py::arg("config_text"), py::arg("honest_runs"), nogil());
    m.def("percentile95_nearest_rank", &percentile95_nearest_rank, py::arg("values"));
}
