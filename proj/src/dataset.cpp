#include "truvrf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "truvrf/binio.hpp"

namespace truvrf {

LabeledDataset::LabeledDataset(std::vector<Sample> samples, int num_classes)
    : samples_(std::move(samples)), num_classes_(num_classes) {
    if (num_classes_ < 1) throw invalid_input("num_classes must be >= 1");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const Sample& s = samples_[i];
        if (s.label < 0 || s.label >= num_classes_)
            throw invalid_input("sample " + std::to_string(s.id) + " has label " +
                                std::to_string(s.label) + " outside [0, " +
                                std::to_string(num_classes_) + ")");
        if (i == 0) {
            feature_dim_ = static_cast<int>(s.features.size());
        } else if (static_cast<int>(s.features.size()) != feature_dim_) {
            throw invalid_input("inconsistent feature dimension at sample " +
                                std::to_string(s.id));
        }
        if (!position_of_.emplace(s.id, i).second)
            throw invalid_input("duplicate sample id " + std::to_string(s.id));
        class_index_[s.label].push_back(s.id);
    }
}

const std::vector<std::int64_t>& LabeledDataset::ids_of_class(int label) const {
    static const std::vector<std::int64_t> kEmpty;
    auto it = class_index_.find(label);
    return it == class_index_.end() ? kEmpty : it->second;
}

std::size_t LabeledDataset::class_count(int label) const { return ids_of_class(label).size(); }

const Sample& LabeledDataset::by_id(std::int64_t id) const {
    auto it = position_of_.find(id);
    if (it == position_of_.end())
        throw invalid_input("no sample with id " + std::to_string(id));
    return samples_[it->second];
}

LabeledDataset LabeledDataset::subset(const std::vector<std::int64_t>& ids) const {
    std::vector<Sample> out;
    out.reserve(ids.size());
    for (std::int64_t id : ids) out.push_back(by_id(id));
    return LabeledDataset(std::move(out), num_classes_);
}

bool UnlearnRequest::empty() const { return total_volume() == 0; }

std::size_t UnlearnRequest::volume(int label) const {
    auto it = ids_by_class.find(label);
    return it == ids_by_class.end() ? 0 : it->second.size();
}

std::size_t UnlearnRequest::total_volume() const {
    std::size_t n = 0;
    for (const auto& [label, ids] : ids_by_class) n += ids.size();
    return n;
}

std::set<std::int64_t> UnlearnRequest::all_ids() const {
    std::set<std::int64_t> out;
    for (const auto& [label, ids] : ids_by_class) out.insert(ids.begin(), ids.end());
    return out;
}

std::vector<int> UnlearnRequest::classes() const {
    std::vector<int> out;
    for (const auto& [label, ids] : ids_by_class)
        if (!ids.empty()) out.push_back(label);
    return out;
}

void validate_request(const LabeledDataset& data, const UnlearnRequest& request) {
    for (const auto& [label, ids] : request.ids_by_class) {
        for (std::int64_t id : ids) {
            if (!data.contains(id))
                throw invalid_input("requested id " + std::to_string(id) +
                                    " is not in the dataset");
            if (data.by_id(id).label != label)
                throw invalid_input("requested id " + std::to_string(id) + " has class " +
                                    std::to_string(data.by_id(id).label) + ", not " +
                                    std::to_string(label));
        }
    }
}

// -- Construction -----------------------------------------------------------

LabeledDataset gen_synthetic(int num_classes, const std::vector<std::int64_t>& per_class, int dim,
                             double separation, std::uint64_t seed) {
    if (num_classes < 2) throw invalid_input("gen_synthetic needs num_classes >= 2");
    if (static_cast<int>(per_class.size()) != num_classes)
        throw invalid_input("per_class must list one count per class");
    for (std::int64_t n : per_class)
        if (n < 0) throw invalid_input("per_class counts must be >= 0");
    if (dim < 1) throw invalid_input("dim must be >= 1");
    if (separation <= 0.0) throw invalid_input("separation must be positive");

    // Place class means at separation * u_c for unit directions u_c with
    // pairwise dot <= 0.5, so mean distance >= separation. Rejection-sampled;
    // bounded attempts keep "dim too small" failures crisp.
    Rng dir_rng(mix_seed(seed, tag_seed("directions")));
    std::vector<std::vector<double>> means;
    const int kMaxAttempts = 20000;
    int attempts = 0;
    while (static_cast<int>(means.size()) < num_classes) {
        if (++attempts > kMaxAttempts)
            throw infeasible_error("dim too small to separate " + std::to_string(num_classes) +
                                   " classes");
        std::vector<double> u(dim);
        double norm2 = 0.0;
        for (double& x : u) {
            x = dir_rng.normal();
            norm2 += x * x;
        }
        if (norm2 < 1e-12) continue;
        double inv = 1.0 / std::sqrt(norm2);
        for (double& x : u) x *= inv;
        bool ok = true;
        for (const auto& v : means) {
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) dot += u[d] * v[d];
            if (dot > 0.5) {
                ok = false;
                break;
            }
        }
        if (ok) means.push_back(std::move(u));
    }
    for (auto& m : means)
        for (double& x : m) x *= separation;

    std::vector<Sample> samples;
    std::int64_t next_id = 0;
    for (int c = 0; c < num_classes; ++c) {
        Rng rng(mix_seed(seed, tag_seed("class"), static_cast<std::uint64_t>(c)));
        for (std::int64_t i = 0; i < per_class[c]; ++i) {
            Sample s;
            s.id = next_id++;
            s.label = c;
            s.features.resize(dim);
            for (int d = 0; d < dim; ++d) s.features[d] = means[c][d] + rng.normal();
            samples.push_back(std::move(s));
        }
    }
    return LabeledDataset(std::move(samples), num_classes);
}

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw format_error("cannot open " + images_path.string());
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw format_error("cannot open " + labels_path.string());

    std::uint32_t img_magic = binio::read_u32_be(img, "image magic");
    if (img_magic != 0x803u)
        throw format_error("bad IDX image magic: expected 0x00000803");
    std::uint32_t n_images = binio::read_u32_be(img, "image count");
    std::uint32_t rows = binio::read_u32_be(img, "image rows");
    std::uint32_t cols = binio::read_u32_be(img, "image cols");

    std::uint32_t lab_magic = binio::read_u32_be(lab, "label magic");
    if (lab_magic != 0x801u)
        throw format_error("bad IDX label magic: expected 0x00000801");
    std::uint32_t n_labels = binio::read_u32_be(lab, "label count");
    if (n_images != n_labels)
        throw format_error("IDX image/label counts differ: " + std::to_string(n_images) + " vs " +
                           std::to_string(n_labels));

    std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    std::vector<Sample> samples;
    samples.reserve(n_images);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        binio::read_bytes(img, buf.data(), pixels, "image pixels");
        unsigned char label_byte = 0;
        binio::read_bytes(lab, &label_byte, 1, "label byte");
        Sample s;
        s.id = static_cast<std::int64_t>(i);
        s.label = static_cast<int>(label_byte);
        max_label = std::max(max_label, s.label);
        s.features.resize(pixels);
        for (std::size_t p = 0; p < pixels; ++p) s.features[p] = buf[p] / 255.0;
        samples.push_back(std::move(s));
    }
    return LabeledDataset(std::move(samples), max_label + 1);
}

// -- Slicing ----------------------------------------------------------------

LabeledDataset remove(const LabeledDataset& data, const UnlearnRequest& request) {
    validate_request(data, request);
    std::set<std::int64_t> drop = request.all_ids();
    std::vector<Sample> kept;
    kept.reserve(data.size() - drop.size());
    for (const Sample& s : data.samples())
        if (!drop.count(s.id)) kept.push_back(s);
    return LabeledDataset(std::move(kept), data.num_classes());
}

UnlearnRequest sample_disjoint(const LabeledDataset& data, const UnlearnRequest& request,
                               std::uint64_t seed) {
    validate_request(data, request);
    UnlearnRequest out;
    for (const auto& [label, wanted] : request.ids_by_class) {
        if (wanted.empty()) continue;
        std::vector<std::int64_t> pool;
        for (std::int64_t id : data.ids_of_class(label))
            if (!wanted.count(id)) pool.push_back(id);
        if (pool.size() < wanted.size())
            throw infeasible_error("class " + std::to_string(label) + " has only " +
                                   std::to_string(pool.size()) +
                                   " substitutable samples, need " +
                                   std::to_string(wanted.size()));
        Rng rng(mix_seed(seed, tag_seed("disjoint"), static_cast<std::uint64_t>(label)));
        std::vector<std::size_t> pick = rng.sample_indices(pool.size(), wanted.size());
        for (std::size_t p : pick) out.ids_by_class[label].insert(pool[p]);
    }
    return out;
}

std::pair<LabeledDataset, LabeledDataset> split_per_class(
    const LabeledDataset& data, const std::map<int, std::int64_t>& head_per_class) {
    std::set<std::int64_t> head_ids;
    for (const auto& [label, take] : head_per_class) {
        const auto& ids = data.ids_of_class(label);
        if (take < 0 || static_cast<std::size_t>(take) > ids.size())
            throw invalid_input("cannot take " + std::to_string(take) + " of " +
                                std::to_string(ids.size()) + " samples of class " +
                                std::to_string(label));
        head_ids.insert(ids.begin(), ids.begin() + take);
    }
    std::vector<std::int64_t> head, tail;
    for (const Sample& s : data.samples())
        (head_ids.count(s.id) ? head : tail).push_back(s.id);
    return {data.subset(head), data.subset(tail)};
}

// -- Request builders --------------------------------------------------------

UnlearnRequest request_full_class(const LabeledDataset& data, int label) {
    const auto& ids = data.ids_of_class(label);
    if (ids.empty()) throw invalid_input("class " + std::to_string(label) + " has no samples");
    UnlearnRequest r;
    r.ids_by_class[label].insert(ids.begin(), ids.end());
    return r;
}

UnlearnRequest request_random(const LabeledDataset& data, const std::vector<int>& labels,
                              std::int64_t volume_per_class, std::uint64_t seed) {
    if (volume_per_class < 1) throw invalid_input("volume_per_class must be >= 1");
    UnlearnRequest r;
    for (int label : labels) {
        const auto& ids = data.ids_of_class(label);
        if (static_cast<std::size_t>(volume_per_class) > ids.size())
            throw invalid_input("class " + std::to_string(label) + " has " +
                                std::to_string(ids.size()) + " samples, cannot request " +
                                std::to_string(volume_per_class));
        Rng rng(mix_seed(seed, tag_seed("request"), static_cast<std::uint64_t>(label)));
        std::vector<std::size_t> pick = rng.sample_indices(ids.size(),
                                                           static_cast<std::size_t>(volume_per_class));
        for (std::size_t p : pick) r.ids_by_class[label].insert(ids[p]);
    }
    return r;
}

// -- Persistence ---------------------------------------------------------------

namespace {
constexpr const char* kDataMagic = "TRUVRF-DATA";
constexpr std::uint32_t kDataVersion = 1;
}  // namespace

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("cannot open " + path.string() + " for writing");
    write_dataset(out, data);
    if (!out) throw format_error("failed writing " + path.string());
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open " + path.string());
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const LabeledDataset& data) {
    binio::write_magic(out, kDataMagic);
    binio::write_le<std::uint32_t>(out, kDataVersion);
    binio::write_le<std::int32_t>(out, data.num_classes());
    binio::write_le<std::int32_t>(out, data.feature_dim());
    binio::write_le<std::int64_t>(out, static_cast<std::int64_t>(data.size()));
    for (const Sample& s : data.samples()) binio::write_le<std::int64_t>(out, s.id);
    for (const Sample& s : data.samples()) binio::write_le<std::int32_t>(out, s.label);
    for (const Sample& s : data.samples())
        for (double x : s.features) binio::write_f64(out, x);
}

LabeledDataset read_dataset(std::istream& in) {
    binio::expect_magic(in, kDataMagic);
    std::uint32_t version = binio::read_le<std::uint32_t>(in, "dataset version");
    if (version != kDataVersion)
        throw format_error("unsupported dataset version " + std::to_string(version));
    int num_classes = binio::read_le<std::int32_t>(in, "num_classes");
    int dim = binio::read_le<std::int32_t>(in, "feature_dim");
    std::int64_t n = binio::read_le<std::int64_t>(in, "sample count");
    if (n < 0 || dim < 0) throw format_error("corrupt dataset header");
    std::vector<Sample> samples(static_cast<std::size_t>(n));
    for (auto& s : samples) s.id = binio::read_le<std::int64_t>(in, "sample id");
    for (auto& s : samples) s.label = binio::read_le<std::int32_t>(in, "sample label");
    for (auto& s : samples) {
        s.features.resize(dim);
        for (double& x : s.features) x = binio::read_f64(in, "feature value");
    }
    return LabeledDataset(std::move(samples), num_classes);
}

}  // namespace truvrf
