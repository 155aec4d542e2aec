#include "truvrf/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "truvrf/binio.hpp"

namespace truvrf {

void ModelSpec::validate() const {
    if (input_dim < 1) throw invalid_input("input_dim must be >= 1");
    if (num_classes < 2) throw invalid_input("num_classes must be >= 2");
    for (int h : hidden_layers)
        if (h < 1) throw invalid_input("hidden layer widths must be >= 1");
}

std::vector<int> ModelSpec::dims() const {
    std::vector<int> d;
    d.reserve(hidden_layers.size() + 2);
    d.push_back(input_dim);
    d.insert(d.end(), hidden_layers.begin(), hidden_layers.end());
    d.push_back(num_classes);
    return d;
}

std::size_t ModelSpec::parameter_count() const {
    validate();
    std::vector<int> d = dims();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l)
        n += static_cast<std::size_t>(d[l + 1]) * (d[l] + 1);
    return n;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw invalid_input("learning_rate must be positive");
    if (epochs < 0) throw invalid_input("epochs must be >= 0");
    if (batch_size < 1) throw invalid_input("batch_size must be >= 1");
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec = spec;
    m.provenance.init_seed = seed;
    m.params.resize(spec.parameter_count());
    Rng rng(seed);
    std::vector<int> d = spec.dims();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
        int in = d[l], out = d[l + 1];
        double limit = std::sqrt(6.0 / (in + out));
        for (int i = 0; i < out * in; ++i) m.params[off++] = rng.uniform(-limit, limit);
        for (int i = 0; i < out; ++i) m.params[off++] = 0.0;  // biases
    }
    return m;
}

namespace {

// One forward pass keeping every layer's activations for backprop.
// acts[0] is the input; acts.back() holds raw logits (no softmax applied).
void forward_all(const Model& model, const std::vector<double>& x,
                 std::vector<std::vector<double>>& acts) {
    std::vector<int> d = model.spec.dims();
    acts.resize(d.size());
    acts[0] = x;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
        int in = d[l], out = d[l + 1];
        const double* W = model.params.data() + off;
        const double* b = W + static_cast<std::size_t>(out) * in;
        acts[l + 1].assign(out, 0.0);
        for (int o = 0; o < out; ++o) {
            double z = b[o];
            const double* row = W + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) z += row[i] * acts[l][i];
            bool last = (l + 2 == d.size());
            acts[l + 1][o] = last ? z : std::max(0.0, z);
        }
        off += static_cast<std::size_t>(out) * (in + 1);
    }
}

// Stable softmax CE: loss = logsumexp(z) - z[label].
double softmax_ce(const std::vector<double>& logits, int label, std::vector<double>& probs) {
    double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    probs.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - zmax);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return std::log(sum) + zmax - logits[label];
}

}  // namespace

std::vector<double> forward_logits(const Model& model, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != model.spec.input_dim)
        throw invalid_input("feature dimension mismatch");
    std::vector<std::vector<double>> acts;
    forward_all(model, features, acts);
    return acts.back();
}

int predict_class(const Model& model, const std::vector<double>& features) {
    std::vector<double> z = forward_logits(model, features);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::pair<double, GradVector> loss_and_grad(const Model& model, const LabeledDataset& data) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0u);
    return loss_and_grad(model, data, all);
}

std::pair<double, GradVector> loss_and_grad(const Model& model, const LabeledDataset& data,
                                            std::span<const std::size_t> positions) {
    if (positions.empty()) throw invalid_input("cannot take a gradient over an empty batch");
    if (data.feature_dim() != model.spec.input_dim)
        throw invalid_input("dataset feature_dim does not match model input_dim");
    if (data.num_classes() > model.spec.num_classes)
        throw invalid_input("dataset has more classes than the model");

    std::vector<int> d = model.spec.dims();
    GradVector grad;
    grad.values.assign(model.params.size(), 0.0);
    double total_loss = 0.0;

    std::vector<std::vector<double>> acts;
    std::vector<double> probs;
    std::vector<double> delta, delta_prev;
    for (std::size_t pos : positions) {
        const Sample& s = data.at(pos);
        forward_all(model, s.features, acts);
        total_loss += softmax_ce(acts.back(), s.label, probs);

        // dL/dz at the head: p - onehot(label).
        delta = probs;
        delta[s.label] -= 1.0;

        // Walk layers backwards accumulating dL/dW, dL/db, and dL/d(input).
        std::size_t off = model.params.size();
        for (std::size_t l = d.size() - 1; l-- > 0;) {
            int in = d[l], out = d[l + 1];
            off -= static_cast<std::size_t>(out) * (in + 1);
            const double* W = model.params.data() + off;
            double* gW = grad.values.data() + off;
            double* gb = gW + static_cast<std::size_t>(out) * in;
            const std::vector<double>& a = acts[l];
            for (int o = 0; o < out; ++o) {
                double* grow = gW + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) grow[i] += delta[o] * a[i];
                gb[o] += delta[o];
            }
            if (l == 0) break;
            delta_prev.assign(in, 0.0);
            for (int i = 0; i < in; ++i) {
                if (a[i] <= 0.0) continue;  // ReLU gate (a[i] = max(0, z) here)
                double acc = 0.0;
                for (int o = 0; o < out; ++o)
                    acc += W[static_cast<std::size_t>(o) * in + i] * delta[o];
                delta_prev[i] = acc;
            }
            delta.swap(delta_prev);
        }
    }

    double inv = 1.0 / static_cast<double>(positions.size());
    for (double& g : grad.values) g *= inv;
    return {total_loss * inv, std::move(grad)};
}

Model sgd_step(const Model& model, const GradVector& grad, double alpha) {
    if (grad.values.size() != model.params.size())
        throw invalid_input("gradient size does not match parameter count");
    if (!(alpha > 0.0)) throw invalid_input("learning rate must be positive");
    Model out = model;
    for (std::size_t i = 0; i < out.params.size(); ++i)
        out.params[i] -= alpha * grad.values[i];
    ++out.provenance.sgd_steps;
    return out;
}

Model train(const Model& model, const LabeledDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw invalid_input("cannot train on an empty dataset");
    Model cur = model;
    std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order = rng.permutation(data.size());
        for (std::size_t start = 0; start < order.size(); start += bs) {
            std::size_t len = std::min(bs, order.size() - start);
            std::span<const std::size_t> batch(order.data() + start, len);
            auto [loss, grad] = loss_and_grad(cur, data, batch);
            (void)loss;
            cur = sgd_step(cur, grad, cfg.learning_rate);
        }
    }
    return cur;
}

double evaluate(const Model& model, const LabeledDataset& data) {
    if (data.empty()) throw invalid_input("cannot evaluate on an empty dataset");
    std::size_t hits = 0;
    for (const Sample& s : data.samples())
        if (predict_class(model, s.features) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

// -- Persistence ---------------------------------------------------------------

namespace {
constexpr const char* kModelMagic = "TRUVRF-MODEL";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("cannot open " + path.string() + " for writing");
    write_model(out, model);
    if (!out) throw format_error("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open " + path.string());
    return read_model(in);
}

void write_model(std::ostream& out, const Model& model) {
    binio::write_magic(out, kModelMagic);
    binio::write_le<std::uint32_t>(out, kModelVersion);
    binio::write_le<std::int32_t>(out, model.spec.input_dim);
    binio::write_le<std::int32_t>(out, static_cast<std::int32_t>(model.spec.hidden_layers.size()));
    for (int h : model.spec.hidden_layers) binio::write_le<std::int32_t>(out, h);
    binio::write_le<std::int32_t>(out, model.spec.num_classes);
    binio::write_le<std::uint64_t>(out, model.provenance.init_seed);
    binio::write_le<std::uint64_t>(out, model.provenance.sgd_steps);
    binio::write_le<std::uint64_t>(out, model.params.size());
    for (double p : model.params) binio::write_f64(out, p);
}

Model read_model(std::istream& in) {
    binio::expect_magic(in, kModelMagic);
    std::uint32_t version = binio::read_le<std::uint32_t>(in, "model version");
    if (version != kModelVersion)
        throw format_error("unsupported model version " + std::to_string(version));
    Model m;
    m.spec.input_dim = binio::read_le<std::int32_t>(in, "input_dim");
    std::int32_t n_hidden = binio::read_le<std::int32_t>(in, "hidden layer count");
    if (n_hidden < 0) throw format_error("corrupt model header");
    m.spec.hidden_layers.resize(n_hidden);
    for (int& h : m.spec.hidden_layers) h = binio::read_le<std::int32_t>(in, "hidden width");
    m.spec.num_classes = binio::read_le<std::int32_t>(in, "num_classes");
    m.provenance.init_seed = binio::read_le<std::uint64_t>(in, "init_seed");
    m.provenance.sgd_steps = binio::read_le<std::uint64_t>(in, "sgd_steps");
    std::uint64_t n_params = binio::read_le<std::uint64_t>(in, "parameter count");
    if (n_params != m.spec.parameter_count())
        throw format_error("parameter count does not match the architecture");
    m.params.resize(n_params);
    for (double& p : m.params) p = binio::read_f64(in, "parameter");
    return m;
}

}  // namespace truvrf
