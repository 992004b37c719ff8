#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ans/matrix.hpp"
#include "ans/ops.hpp"

namespace ans {

/// Labelled feature matrix. Construction enforces: at least one sample, one
/// label per row, every label < num_classes, all features finite.
class Dataset {
public:
    Dataset(Matrix features, std::vector<Label> labels, std::size_t num_classes, std::string name = {});

    const Matrix& features() const noexcept { return features_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    const std::string& name() const noexcept { return name_; }
    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return features_.cols(); }

    /// Samples at `indices`, in that order.
    Dataset subset(std::span<const std::size_t> indices, std::string name) const;

    /// 64-bit FNV-1a over shape, feature bit patterns and labels, as 16 hex digits.
    std::string fingerprint() const;

private:
    Matrix features_;
    std::vector<Label> labels_;
    std::size_t num_classes_;
    std::string name_;
};

struct DelimitedSchema {
    char delimiter = ',';
    bool has_header = false;
    /// Zero-based label column; unset means the last column.
    std::optional<std::size_t> label_column;
    /// Zero-based feature columns; empty means every column except the label.
    std::vector<std::size_t> feature_columns;
    /// When non-empty, labels are strings mapped to their index here.
    std::vector<std::string> label_names;
};

/// One sample per line; '#' lines and blank lines are skipped. Throws
/// ParseError carrying the 1-based line number on ragged rows, non-numeric
/// features or unknown labels, and on files with no samples.
Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema = {});

/// Writes features then the integer label, full round-trip precision.
void save_delimited(const std::filesystem::path& path, const Dataset& data, bool header = true,
                    char delimiter = ',');

/// Two interleaved Archimedean spirals inside the unit disc. For class c:
///
///   t = T * sqrt(u),  u ~ U[0, 1),  T = turns * 2 pi
///   r = t / T
///   p = r * (cos(t + c pi), sin(t + c pi)) + N(0, noise_std^2 I)
///
/// Opposite-class windings sit 1 / (2 turns) apart radially. Rows alternate
/// class 0, class 1.
Dataset make_two_spirals(std::size_t n_per_class, double noise_std, double turns, std::uint64_t seed);

/// One isotropic Gaussian cluster per center; class i is centered on centers[i].
Dataset make_gaussian_blobs(const std::vector<std::vector<double>>& centers, std::size_t n_per_class,
                            double stddev, std::uint64_t seed);

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;  ///< population std, floored at 1e-8
};

struct NormalizedSplits {
    Dataset train;
    std::vector<Dataset> others;
    FeatureStats stats;
};

/// Z-scores every split with statistics fitted on `train` alone.
NormalizedSplits normalize_standard(const Dataset& train, const std::vector<Dataset>& others = {});

/// Applies previously fitted statistics.
Dataset apply_normalization(const Dataset& data, const FeatureStats& stats);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool stratified = false;
};

/// Seeded permutation then partition (per class when stratified, with each
/// class contributing round(fraction * n_class) training samples). Throws
/// DomainError if either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

}  // namespace ans
