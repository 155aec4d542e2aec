#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "truvrf/dataset.hpp"

namespace truvrf {

/// Fully-connected ReLU net with a softmax head. hidden_layers may be empty
/// (multinomial logistic regression).
struct ModelSpec {
    int input_dim = 0;
    std::vector<int> hidden_layers;
    int num_classes = 0;

    void validate() const;
    /// All layer widths, input first: {input_dim, hidden..., num_classes}.
    std::vector<int> dims() const;
    std::size_t parameter_count() const;

    bool operator==(const ModelSpec&) const = default;
};

struct Provenance {
    std::uint64_t init_seed = 0;
    std::uint64_t sgd_steps = 0;

    bool operator==(const Provenance&) const = default;
};

/// Parameters live in one flat vector: for each layer, the weight matrix
/// row-major (out x in) followed by the bias. Everything downstream — SGD,
/// sensitivity extraction, serialization — indexes this one canonical order.
struct Model {
    ModelSpec spec;
    std::vector<double> params;
    Provenance provenance;

    bool operator==(const Model&) const = default;
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 1;
    int batch_size = 32;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
};

struct GradVector {
    std::vector<double> values;
};

Model init_model(const ModelSpec& spec, std::uint64_t seed);

std::vector<double> forward_logits(const Model& model, const std::vector<double>& features);
int predict_class(const Model& model, const std::vector<double>& features);

/// Mean cross-entropy over the whole dataset plus its exact gradient.
std::pair<double, GradVector> loss_and_grad(const Model& model, const LabeledDataset& data);
/// Same, restricted to the samples at the given positions.
std::pair<double, GradVector> loss_and_grad(const Model& model, const LabeledDataset& data,
                                            std::span<const std::size_t> positions);

/// theta - alpha * g, value semantics. Bumps provenance.sgd_steps.
Model sgd_step(const Model& model, const GradVector& grad, double alpha);

/// Mini-batch SGD: each epoch visits every sample once in a freshly shuffled
/// order, split into consecutive batches (last one may be short).
Model train(const Model& model, const LabeledDataset& data, const TrainConfig& cfg);

/// Fraction of samples whose argmax logit matches the label; ties go to the
/// lowest class index.
double evaluate(const Model& model, const LabeledDataset& data);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// Stream forms, used when a model is embedded inside a container file.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

}  // namespace truvrf
