// truvrf — machine-unlearning verification toolkit.
//
// Exit codes: 0 success, 2 invalid config/input, 3 infeasible scenario,
// 4 calibration failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "truvrf/harness.hpp"

namespace {

using namespace truvrf;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw invalid_input("cannot open " + path + " for writing");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw format_error("failed writing " + path);
}

void print_or_save(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text << '\n';
    else
        spill(out_path, text);
}

/// Model files and ensemble containers share the "TRUVRF-" prefix; byte 8
/// tells them apart.
AnyModel load_any_model(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw invalid_input("cannot open " + path);
    char head[12] = {};
    probe.read(head, sizeof(head));
    std::string prefix(head, static_cast<std::size_t>(probe.gcount()));
    probe.close();
    if (prefix.rfind("TRUVRF-MODEL", 0) == 0) return load_model(path);
    if (prefix.rfind("TRUVRF-SISA", 0) == 0) return load_ensemble(path);
    throw format_error(path + " is neither a model nor an ensemble container");
}

void save_any_model(const AnyModel& model, const std::string& path) {
    if (const Model* m = std::get_if<Model>(&model))
        save_model(*m, path);
    else
        save_ensemble(std::get<SisaEnsemble>(model), path);
}

std::vector<int> parse_hidden(const std::string& text) {
    std::vector<int> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

UnlearnRequest build_request(const LabeledDataset& data, std::vector<int> classes,
                             const std::string& volume, std::uint64_t seed) {
    if (classes.empty()) throw invalid_input("--class is required");
    if (volume == "all") {
        UnlearnRequest r;
        for (int c : classes) {
            UnlearnRequest full = request_full_class(data, c);
            r.ids_by_class.merge(full.ids_by_class);
        }
        return r;
    }
    return request_random(data, classes, std::stoll(volume), seed);
}

int run(int argc, char** argv) {
    CLI::App app{"model-sensitivity verification for machine unlearning"};
    app.require_subcommand(1);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic Gaussian-cluster dataset, "
                                               "or convert an IDX pair");
    int g_classes = 5, g_dim = 8;
    std::string g_per_class = "650";
    double g_sep = 3.0;
    std::uint64_t g_seed = 1;
    std::string g_out, g_images, g_labels;
    gen->add_option("--num-classes", g_classes, "number of classes");
    gen->add_option("--per-class", g_per_class,
                    "samples per class (single value, or one per class comma separated)");
    gen->add_option("--dim", g_dim, "feature dimension");
    gen->add_option("--separation", g_sep, "distance between class means");
    gen->add_option("--seed", g_seed, "generation seed");
    gen->add_option("--images", g_images, "IDX image file (converts instead of generating)");
    gen->add_option("--labels", g_labels, "IDX label file");
    gen->add_option("--out", g_out, "output dataset file")->required();
    std::string g_test_out;
    std::int64_t g_test_per_class = 0;
    gen->add_option("--test-out", g_test_out, "hold out a test split into this file");
    gen->add_option("--test-per-class", g_test_per_class, "held-out samples per class");
    gen->callback([&] {
        LabeledDataset data;
        if (!g_images.empty() || !g_labels.empty()) {
            if (g_images.empty() || g_labels.empty())
                throw invalid_input("--images and --labels go together");
            data = load_idx(g_images, g_labels);
        } else {
            std::vector<std::int64_t> counts;
            std::stringstream ss(g_per_class);
            std::string item;
            while (std::getline(ss, item, ',')) counts.push_back(std::stoll(item));
            if (counts.size() == 1) counts.assign(g_classes, counts[0]);
            data = gen_synthetic(g_classes, counts, g_dim, g_sep, g_seed);
        }
        if (!g_test_out.empty()) {
            if (g_test_per_class <= 0)
                throw invalid_input("--test-out needs --test-per-class > 0");
            std::map<int, std::int64_t> head;
            for (const auto& [label, ids] : data.class_index())
                head[label] = static_cast<std::int64_t>(ids.size()) - g_test_per_class;
            auto [train, test] = split_per_class(data, head);
            save_dataset(test, g_test_out);
            data = train;
            std::cout << "held out " << test.size() << " samples -> " << g_test_out << '\n';
        }
        save_dataset(data, g_out);
        std::cout << "wrote " << data.size() << " samples, " << data.num_classes()
                  << " classes, dim " << data.feature_dim() << " -> " << g_out << '\n';
    });

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train a model from scratch");
    std::string t_data, t_out, t_hidden = "32,16", t_eval;
    double t_lr = 0.05;
    int t_epochs = 20, t_batch = 32;
    std::uint64_t t_seed = 0;
    tr->add_option("--data", t_data, "training dataset file")->required();
    tr->add_option("--hidden", t_hidden, "hidden layer widths, comma separated ('' = none)");
    tr->add_option("--lr", t_lr, "learning rate");
    tr->add_option("--epochs", t_epochs, "training epochs");
    tr->add_option("--batch-size", t_batch, "mini-batch size");
    tr->add_option("--seed", t_seed, "init + shuffle seed");
    tr->add_option("--eval", t_eval, "optional dataset to report accuracy on");
    tr->add_option("--out", t_out, "output model file")->required();
    tr->callback([&] {
        LabeledDataset data = load_dataset(t_data);
        ModelSpec spec{data.feature_dim(), parse_hidden(t_hidden), data.num_classes()};
        TrainConfig cfg{t_lr, t_epochs, t_batch, mix_seed(t_seed, tag_seed("shuffle"))};
        Model model = train(init_model(spec, mix_seed(t_seed, tag_seed("init"))), data, cfg);
        save_model(model, t_out);
        std::cout << "trained " << spec.parameter_count() << " parameters -> " << t_out << '\n';
        if (!t_eval.empty())
            std::cout << "accuracy on " << t_eval << ": " << evaluate(model, load_dataset(t_eval))
                      << '\n';
    });

    // ---- unlearn ----
    auto* un = app.add_subcommand("unlearn",
                                  "train an origin model, apply a (possibly dishonest) server "
                                  "behavior to a request, and unlearn");
    std::string u_data, u_framework = "retrain", u_volume = "all", u_behavior = "honest";
    std::string u_out_o, u_out_u, u_hidden = "32,16";
    std::vector<int> u_classes;
    double u_lr = 0.05, u_keep = 0.5;
    int u_epochs = 20, u_batch = 32, u_k = 5, u_am_epochs = 0;
    std::uint64_t u_seed = 0, u_req_seed = 0, u_beh_seed = 0;
    un->add_option("--data", u_data, "training dataset file")->required();
    un->add_option("--framework", u_framework, "retrain | sisa | amnesiac");
    un->add_option("--k", u_k, "sisa shard count");
    un->add_option("--amnesiac-epochs", u_am_epochs, "continue-training epochs (0 = --epochs)");
    un->add_option("--hidden", u_hidden, "hidden layer widths");
    un->add_option("--lr", u_lr, "learning rate");
    un->add_option("--epochs", u_epochs, "training epochs");
    un->add_option("--batch-size", u_batch, "mini-batch size");
    un->add_option("--seed", u_seed, "model seed");
    un->add_option("--class", u_classes, "class to unlearn (repeatable)")->required();
    un->add_option("--volume", u_volume, "samples per class, or 'all'");
    un->add_option("--request-seed", u_req_seed, "request sampling seed");
    un->add_option("--behavior", u_behavior, "honest | neglecting | lazy | deceiving");
    un->add_option("--keep-fraction", u_keep, "lazy: fraction of the request kept");
    un->add_option("--behavior-seed", u_beh_seed, "server behavior seed");
    un->add_option("--out-origin", u_out_o, "output file for the origin model")->required();
    un->add_option("--out-unlearned", u_out_u, "output file for the unlearned model")->required();
    std::string u_out_req;
    un->add_option("--out-request", u_out_req,
                   "also save the requested samples as a dataset (verifier's copy)");
    un->callback([&] {
        LabeledDataset data = load_dataset(u_data);
        ModelSpec spec{data.feature_dim(), parse_hidden(u_hidden), data.num_classes()};
        TrainConfig cfg{u_lr, u_epochs, u_batch, mix_seed(u_seed, tag_seed("shuffle"))};
        UnlearnRequest requested = build_request(data, u_classes, u_volume, u_req_seed);
        ServerBehavior behavior{server_kind_from_string(u_behavior), u_keep, u_beh_seed};
        UnlearnRequest executed = apply_behavior(requested, behavior, data);
        std::cout << "requested " << requested.total_volume() << " samples, server forgets "
                  << executed.total_volume() << '\n';
        if (!u_out_req.empty()) {
            std::set<std::int64_t> ids = requested.all_ids();
            save_dataset(data.subset({ids.begin(), ids.end()}), u_out_req);
        }

        AnyModel model_o, model_u;
        if (executed.empty()) {
            if (u_framework == "sisa")
                model_o = sisa_train(data, u_k, spec, cfg, u_seed);
            else
                model_o = train(init_model(spec, mix_seed(u_seed, tag_seed("init"))), data, cfg);
            model_u = model_o;
        } else if (u_framework == "retrain") {
            UnlearnOutcome out = retrain_unlearn(data, executed, spec, cfg,
                                                 mix_seed(u_seed, tag_seed("init")));
            model_o = std::move(out.model_o);
            model_u = std::move(out.model_u);
        } else if (u_framework == "sisa") {
            SisaEnsemble ens = sisa_train(data, u_k, spec, cfg, u_seed);
            model_u = sisa_unlearn(ens, executed);
            model_o = std::move(ens);
        } else if (u_framework == "amnesiac") {
            Model origin =
                train(init_model(spec, mix_seed(u_seed, tag_seed("init"))), data, cfg);
            TrainConfig cfg_a = cfg;
            if (u_am_epochs > 0) cfg_a.epochs = u_am_epochs;
            cfg_a.shuffle_seed = mix_seed(u_seed, tag_seed("amnesiac-shuffle"));
            UnlearnOutcome out = amnesiac_unlearn(origin, data, executed, cfg_a,
                                                  mix_seed(u_seed, tag_seed("relabel")));
            model_o = std::move(origin);
            model_u = std::move(out.model_u);
        } else {
            throw invalid_input("unknown framework '" + u_framework + "'");
        }
        save_any_model(model_o, u_out_o);
        save_any_model(model_u, u_out_u);
        std::cout << "wrote " << u_out_o << " and " << u_out_u << '\n';
    });

    // ---- shared verify options ----
    std::string v_origin, v_unlearned, v_test_data, v_target_data, v_out, v_um;
    double v_alpha = 0.01, v_threshold = 0.01, v_tau = 0.1;
    int v_probe = 50, v_passes = 1;
    std::uint64_t v_aux_seed = 0;

    auto add_probe_opts = [&](CLI::App* cmd) {
        cmd->add_option("--alpha", v_alpha, "probe learning rate");
        cmd->add_option("--probe-per-class", v_probe, "probe samples per class");
        cmd->add_option("--probe-passes", v_passes, "full-batch probe steps");
        cmd->add_option("--aux-seed", v_aux_seed, "probe sampling seed");
        cmd->add_option("--out", v_out, "write the verdict JSON here instead of stdout");
    };

    // ---- verify-class ----
    auto* vc = app.add_subcommand("verify-class", "which classes changed: sensitivity shift "
                                                  "per class vs a relative threshold");
    vc->add_option("--origin", v_origin, "origin model/ensemble file")->required();
    vc->add_option("--unlearned", v_unlearned, "unlearned model/ensemble file")->required();
    vc->add_option("--test-data", v_test_data, "held-out dataset for probes")->required();
    vc->add_option("--threshold", v_threshold, "relative-change flag level");
    add_probe_opts(vc);
    vc->callback([&] {
        AnyModel mo = load_any_model(v_origin);
        AnyModel mu = load_any_model(v_unlearned);
        AuxiliaryData aux = make_auxiliary(load_dataset(v_test_data), v_probe,
                                           AuxSource::TestData, v_aux_seed);
        ClassVerdict verdict = verify_class(mo, mu, aux, v_alpha, v_threshold, v_passes);
        print_or_save(class_verdict_to_json(verdict), v_out);
    });

    // ---- verify-volume ----
    auto* vv = app.add_subcommand("verify-volume", "how many samples were unlearned, using a "
                                                   "calibrated per-batch measurement");
    vv->add_option("--origin", v_origin, "origin model/ensemble file")->required();
    vv->add_option("--unlearned", v_unlearned, "unlearned model/ensemble file")->required();
    vv->add_option("--um", v_um, "calibration JSON from 'calibrate um'")->required();
    vv->add_option("--probe-data", v_test_data, "dataset for probes")->required();
    add_probe_opts(vv);
    vv->callback([&] {
        AnyModel mo = load_any_model(v_origin);
        AnyModel mu = load_any_model(v_unlearned);
        UnlearningMeasurement um = measurement_from_json(slurp(v_um));
        AuxiliaryData aux = make_auxiliary(load_dataset(v_test_data), v_probe,
                                           AuxSource::TestData, v_aux_seed);
        VolumeEstimate est = verify_volume(mo, mu, um, aux, v_alpha, v_passes);
        print_or_save(volume_estimate_to_json(est), v_out);
    });

    // ---- verify-sample ----
    auto* vs = app.add_subcommand("verify-sample", "were the requested samples really forgotten: "
                                                   "target-vs-test sensitivity gap");
    vs->add_option("--unlearned", v_unlearned, "unlearned model/ensemble file")->required();
    vs->add_option("--target-data", v_target_data, "dataset holding the allegedly forgotten "
                                                   "samples")->required();
    vs->add_option("--test-data", v_test_data, "held-out dataset for reference probes")
        ->required();
    vs->add_option("--tau", v_tau, "honesty threshold on the gap ratio");
    add_probe_opts(vs);
    vs->callback([&] {
        AnyModel mu = load_any_model(v_unlearned);
        LabeledDataset target_data = load_dataset(v_target_data);
        AuxiliaryData target = make_auxiliary(target_data, v_probe, AuxSource::TargetData,
                                              mix_seed(v_aux_seed, tag_seed("target")));
        // Reference probes cover only the classes under scrutiny.
        LabeledDataset test_data = load_dataset(v_test_data);
        std::vector<std::int64_t> keep;
        for (const Sample& s : test_data.samples())
            if (target_data.class_count(s.label) > 0) keep.push_back(s.id);
        AuxiliaryData test = make_auxiliary(test_data.subset(keep), v_probe,
                                            AuxSource::TestData, v_aux_seed);
        SampleVerdict verdict = verify_sample(mu, target, test, v_alpha, v_tau, v_passes);
        print_or_save(sample_verdict_to_json(verdict), v_out);
    });

    // ---- calibrate ----
    auto* cal = app.add_subcommand("calibrate", "produce calibration fixtures");
    cal->require_subcommand(1);

    auto* cal_tau = cal->add_subcommand("tau", "honesty threshold from honest scenario runs");
    std::string ct_config, ct_out;
    int ct_runs = 20;
    cal_tau->add_option("--config", ct_config, "scenario config JSON")->required();
    cal_tau->add_option("--runs", ct_runs, "honest calibration runs");
    cal_tau->add_option("--out", ct_out, "output JSON path");
    cal_tau->callback([&] {
        ScenarioConfig cfg = scenario_from_json(slurp(ct_config));
        double tau = calibrate_tau(cfg, ct_runs);
        nlohmann::ordered_json j;
        j["tau"] = tau;
        j["runs"] = ct_runs;
        print_or_save(j.dump(2), ct_out);
    });

    auto* cal_um = cal->add_subcommand("um", "per-batch sensitivity drop from shadow models");
    std::string cu_train, cu_test, cu_hidden = "32,16", cu_out;
    int cu_class = 0, cu_shadows = 5, cu_bv = 100, cu_probe = 50, cu_epochs = 20, cu_batch = 32;
    int cu_passes = 1;
    double cu_lr = 0.05, cu_alpha = 0.01;
    std::uint64_t cu_seed = 0, cu_aux_seed = 0;
    cal_um->add_option("--data", cu_train, "training dataset file")->required();
    cal_um->add_option("--test-data", cu_test, "held-out dataset for probes")->required();
    cal_um->add_option("--class", cu_class, "target class")->required();
    cal_um->add_option("--shadows", cu_shadows, "shadow model count");
    cal_um->add_option("--batch-volume", cu_bv, "volume quantum");
    cal_um->add_option("--hidden", cu_hidden, "hidden layer widths");
    cal_um->add_option("--lr", cu_lr, "learning rate");
    cal_um->add_option("--epochs", cu_epochs, "training epochs");
    cal_um->add_option("--batch-size", cu_batch, "mini-batch size");
    cal_um->add_option("--alpha", cu_alpha, "probe learning rate");
    cal_um->add_option("--probe-per-class", cu_probe, "probe samples per class");
    cal_um->add_option("--probe-passes", cu_passes, "full-batch probe steps");
    cal_um->add_option("--seed", cu_seed, "shadow training seed");
    cal_um->add_option("--aux-seed", cu_aux_seed, "probe sampling seed");
    cal_um->add_option("--out", cu_out, "output JSON path");
    cal_um->callback([&] {
        LabeledDataset data = load_dataset(cu_train);
        const auto& ids = data.ids_of_class(cu_class);
        if (ids.empty()) throw invalid_input("class has no samples");
        LabeledDataset target = data.subset(ids);
        std::vector<std::int64_t> other_ids;
        for (const Sample& s : data.samples())
            if (s.label != cu_class) other_ids.push_back(s.id);
        LabeledDataset others = data.subset(other_ids);
        ModelSpec spec{data.feature_dim(), parse_hidden(cu_hidden), data.num_classes()};
        TrainConfig cfg{cu_lr, cu_epochs, cu_batch, 0};
        AuxiliaryData aux = make_auxiliary(load_dataset(cu_test), cu_probe, AuxSource::TestData,
                                           cu_aux_seed);
        UnlearningMeasurement um =
            build_unlearning_measurement(target, others, spec, cfg, cu_shadows, cu_bv, aux,
                                         cu_alpha, cu_seed, cu_passes);
        print_or_save(measurement_to_json(um), cu_out);
    });

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "run a seeded trial battery (or a sweep) and "
                                              "write reports");
    std::string b_config, b_out, b_csv, b_plot;
    bench->add_option("--config", b_config, "scenario config JSON")->required();
    bench->add_option("--out", b_out, "report JSON path");
    bench->add_option("--csv", b_csv, "report CSV path");
    bench->add_option("--plot", b_plot, "plot-data CSV path (sweeps)");
    bench->callback([&] {
        ScenarioConfig cfg = scenario_from_json(slurp(b_config));
        if (cfg.sweep) {
            if (b_plot.empty())
                throw invalid_input("sweeping config needs --plot for the plot CSV");
            std::vector<SweepPoint> points = run_sweep(cfg);
            emit_plot_csv(cfg.sweep->pointer, points, b_plot);
            std::cout << "wrote " << points.size() << " sweep points -> " << b_plot << '\n';
            if (!b_out.empty()) {
                for (std::size_t i = 0; i < points.size(); ++i) {
                    std::filesystem::path p(b_out);
                    std::filesystem::path numbered =
                        p.parent_path() /
                        (p.stem().string() + "." + std::to_string(i) + p.extension().string());
                    emit_report(points[i].report, "json", numbered);
                }
            }
            return;
        }
        BenchmarkReport report = run_benchmark(cfg);
        if (b_out.empty() && b_csv.empty()) {
            std::cout << report_to_json(report) << '\n';
        } else {
            if (!b_out.empty()) emit_report(report, "json", b_out);
            if (!b_csv.empty()) emit_report(report, "csv", b_csv);
        }
    });

    // ---- report ----
    auto* rep = app.add_subcommand("report", "summarize or convert a stored report");
    std::string r_in, r_csv;
    rep->add_option("--in", r_in, "report JSON path")->required();
    rep->add_option("--csv", r_csv, "re-emit as CSV here");
    rep->callback([&] {
        BenchmarkReport report = report_from_json(slurp(r_in));
        std::cout << "trials: " << report.trials_completed << " completed, "
                  << report.trials_skipped << " skipped (of " << report.trials_requested
                  << ")\n";
        if (report.tau_used) std::cout << "tau_used: " << *report.tau_used << '\n';
        if (report.metric1_accuracy)
            std::cout << "metric1_accuracy: " << *report.metric1_accuracy << '\n';
        if (report.metric2_mean_deviation)
            std::cout << "metric2_mean_deviation: " << *report.metric2_mean_deviation << '\n';
        if (report.metric2_median_deviation)
            std::cout << "metric2_median_deviation: " << *report.metric2_median_deviation << '\n';
        if (report.metric3_accuracy)
            std::cout << "metric3_accuracy: " << *report.metric3_accuracy << '\n';
        if (!r_csv.empty()) emit_report(report, "csv", r_csv);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const truvrf::calibration_error& e) {
        std::cerr << "calibration failure: " << e.what() << '\n';
        return 4;
    } catch (const truvrf::infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 3;
    } catch (const truvrf::invalid_input& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const truvrf::format_error& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
