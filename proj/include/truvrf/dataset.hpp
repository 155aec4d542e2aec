#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "truvrf/common.hpp"

namespace truvrf {

struct Sample {
    std::int64_t id = 0;
    std::vector<double> features;
    int label = 0;
};

/// Immutable labeled dataset with stable integer sample IDs. IDs survive any
/// slicing pipeline, which is what makes unlearning requests and adversarial
/// substitutions well-defined.
class LabeledDataset {
  public:
    LabeledDataset() = default;
    LabeledDataset(std::vector<Sample> samples, int num_classes);

    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    int num_classes() const { return num_classes_; }
    int feature_dim() const { return feature_dim_; }

    const std::vector<Sample>& samples() const { return samples_; }
    const Sample& at(std::size_t position) const { return samples_[position]; }

    /// class -> IDs in dataset order.
    const std::map<int, std::vector<std::int64_t>>& class_index() const { return class_index_; }
    const std::vector<std::int64_t>& ids_of_class(int label) const;
    std::size_t class_count(int label) const;

    bool contains(std::int64_t id) const { return position_of_.count(id) > 0; }
    const Sample& by_id(std::int64_t id) const;

    /// Subset preserving sample order, IDs, and the task's num_classes.
    LabeledDataset subset(const std::vector<std::int64_t>& ids) const;

  private:
    std::vector<Sample> samples_;
    std::map<int, std::vector<std::int64_t>> class_index_;
    std::map<std::int64_t, std::size_t> position_of_;
    int num_classes_ = 0;
    int feature_dim_ = 0;
};

/// What a data contributor asks the server to forget: class -> sample IDs.
/// Per-class volume is always derived from the ID sets, never stored.
struct UnlearnRequest {
    std::map<int, std::set<std::int64_t>> ids_by_class;

    bool empty() const;
    std::size_t volume(int label) const;
    std::size_t total_volume() const;
    std::set<std::int64_t> all_ids() const;
    std::vector<int> classes() const;

    bool operator==(const UnlearnRequest&) const = default;
};

/// Throws invalid_input if any requested ID is missing from `data` or carries
/// a different class there.
void validate_request(const LabeledDataset& data, const UnlearnRequest& request);

// -- Construction -----------------------------------------------------------

/// Deterministic Gaussian-cluster task. Class means are unit-variance cluster
/// centers placed from `seed` at pairwise distance >= separation; sample IDs
/// are 0..N-1 in generation order (class 0 first).
LabeledDataset gen_synthetic(int num_classes, const std::vector<std::int64_t>& per_class, int dim,
                             double separation, std::uint64_t seed);

/// IDX image/label pair (big-endian header, magic 0x803 / 0x801). Pixels are
/// scaled to [0,1]; IDs follow file order.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

// -- Slicing ----------------------------------------------------------------

/// Dataset minus exactly the requested IDs.
LabeledDataset remove(const LabeledDataset& data, const UnlearnRequest& request);

/// Same per-class volumes as `request`, drawn deterministically from `data`,
/// disjoint from `request` — the Deceiving Server's substitute. Throws
/// infeasible_error when a class lacks enough irrelevant samples.
UnlearnRequest sample_disjoint(const LabeledDataset& data, const UnlearnRequest& request,
                               std::uint64_t seed);

/// Splits per class: the first `head_per_class[c]` IDs of each class go to
/// .first, the rest to .second. Used to carve train/test/aux pools out of one
/// generated universe without disturbing IDs.
std::pair<LabeledDataset, LabeledDataset> split_per_class(
    const LabeledDataset& data, const std::map<int, std::int64_t>& head_per_class);

// -- Request builders --------------------------------------------------------

UnlearnRequest request_full_class(const LabeledDataset& data, int label);
UnlearnRequest request_random(const LabeledDataset& data, const std::vector<int>& labels,
                              std::int64_t volume_per_class, std::uint64_t seed);

// -- Persistence (TRUVRF-DATA, columnar little-endian) ------------------------

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Stream forms, used when a dataset is embedded inside a container file.
void write_dataset(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_dataset(std::istream& in);

}  // namespace truvrf
