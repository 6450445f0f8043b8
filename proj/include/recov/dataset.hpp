#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace recov {

enum class LabelKind { classification, survival, ordinal };

std::string to_string(LabelKind kind);
LabelKind label_kind_from_string(const std::string& s);

// Task-typed labels. Exactly one of the three blocks is populated, per `kind`.
// Classification labels are stored as 0-based indices into class_names.
struct LabelSet {
    LabelKind kind = LabelKind::classification;

    std::vector<int> class_index;
    std::vector<std::string> class_names;  // sorted; size() == n_classes

    std::vector<double> time;
    std::vector<std::uint8_t> event;

    std::vector<int> grade;
    int grade_min = 0;
    int grade_max = 0;

    std::size_t size() const;
    int n_classes() const { return static_cast<int>(class_names.size()); }
    void validate() const;
};

struct Dataset {
    std::string name;
    std::vector<std::string> ids;
    Eigen::MatrixXd features;  // N x D
    std::vector<std::string> feature_names;
    LabelSet labels;

    std::size_t n() const { return ids.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

    // Row index for an id; throws ValidationError on unknown ids.
    int row_of(const std::string& id) const;

    // New dataset keeping only the given rows, in the given order.
    Dataset subset(const std::vector<std::int32_t>& rows) const;

    // Checks all type invariants: unique ids, aligned lengths, finite features.
    void validate() const;

  private:
    mutable std::unordered_map<std::string, int> index_;
    void build_index() const;
};

struct NoiseMask {
    enum class Source { ground_truth, detected };
    Source source = Source::detected;
    std::vector<std::uint8_t> flags;  // 1 = noisy

    std::size_t size() const { return flags.size(); }
    double noise_ratio() const;
    std::size_t n_noisy() const;
    void validate() const;
};

// Fraction of samples on which the two masks agree.
double mask_accuracy(const NoiseMask& detected, const NoiseMask& truth);

// Column mapping for load_dataset. Empty id_column synthesizes row-index ids.
// Empty feature_columns auto-detects all numeric columns not claimed by the schema.
struct DatasetSchema {
    LabelKind task = LabelKind::classification;
    std::string id_column;
    std::string label_column;               // classification / ordinal
    std::string time_column, event_column;  // survival
    std::vector<std::string> feature_columns;
    std::vector<std::string> classes;  // declared class set (optional)
    std::optional<int> grade_min, grade_max;
};

Dataset load_dataset(const std::string& path, const DatasetSchema& schema);

// Writes a dataset back out in a form load_dataset accepts with the same schema
// shape (id column, label column(s), then features).
void save_dataset(const Dataset& data, const std::string& path);

void save_noise_mask(const NoiseMask& mask, const std::vector<std::string>& ids,
                     const std::string& path);
NoiseMask load_noise_mask(const std::string& path, const std::vector<std::string>& ids,
                          NoiseMask::Source source);

struct EncodeOptions {
    std::string id_column;
    std::vector<std::string> passthrough_columns;  // label/time/event columns copied verbatim
    bool zscore_numeric = false;
};

// One-hot encodes every non-numeric unclaimed column (categories sorted
// lexicographically, column named "col=level"); numeric columns pass through,
// optionally z-scored. Returns the number of emitted feature columns.
std::size_t encode_csv(const std::string& in_path, const std::string& out_path,
                       const EncodeOptions& options);

}  // namespace recov
