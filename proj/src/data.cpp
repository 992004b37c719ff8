#include "ans/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "ans/error.hpp"
#include "ans/rng.hpp"

namespace ans {

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Matrix features, std::vector<Label> labels, std::size_t num_classes, std::string name)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      name_(std::move(name)) {
    if (labels_.empty()) throw DomainError("Dataset: at least one sample is required");
    if (features_.rows() != labels_.size()) {
        throw ShapeError("Dataset: " + std::to_string(features_.rows()) + " feature rows but " +
                         std::to_string(labels_.size()) + " labels");
    }
    if (features_.cols() == 0) throw ShapeError("Dataset: no feature columns");
    if (num_classes_ == 0) throw DomainError("Dataset: num_classes must be >= 1");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] >= num_classes_) {
            throw DomainError("Dataset: label " + std::to_string(labels_[i]) + " at row " +
                              std::to_string(i) + " >= num_classes " + std::to_string(num_classes_));
        }
    }
    if (!features_.all_finite()) throw DomainError("Dataset: non-finite feature value");
}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::string name) const {
    std::vector<Label> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= labels_.size()) throw DomainError("Dataset::subset: index out of range");
        labels.push_back(labels_[i]);
    }
    return Dataset(features_.gather_rows(indices), std::move(labels), num_classes_, std::move(name));
}

std::string Dataset::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t word) {
        for (int i = 0; i < 8; ++i) {
            h ^= (word >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    feed(features_.rows());
    feed(features_.cols());
    feed(num_classes_);
    for (double v : features_.data()) feed(std::bit_cast<std::uint64_t>(v));
    for (Label y : labels_) feed(y);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Delimited files

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_index(std::string_view s, std::size_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file '" + path.string() + "'", 0);

    std::vector<double> values;
    std::vector<Label> labels;
    std::optional<std::size_t> columns;
    std::size_t label_col = 0;
    std::vector<std::size_t> feature_cols;
    bool header_pending = schema.has_header;
    std::size_t max_label = 0;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_fields(line, schema.delimiter);

        if (!columns) {
            columns = fields.size();
            if (*columns < 2) throw ParseError("need at least one feature and one label column", line_no);
            label_col = schema.label_column.value_or(*columns - 1);
            if (label_col >= *columns) throw ParseError("label column out of range", line_no);
            feature_cols = schema.feature_columns;
            if (feature_cols.empty()) {
                for (std::size_t c = 0; c < *columns; ++c)
                    if (c != label_col) feature_cols.push_back(c);
            }
            for (std::size_t c : feature_cols)
                if (c >= *columns || c == label_col) throw ParseError("invalid feature column", line_no);
        } else if (fields.size() != *columns) {
            throw ParseError("expected " + std::to_string(*columns) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }

        if (header_pending) {
            header_pending = false;
            continue;
        }

        for (std::size_t c : feature_cols) {
            double v = 0.0;
            if (!parse_double(trim(fields[c]), v))
                throw ParseError("non-numeric feature '" + std::string(trim(fields[c])) + "' in column " +
                                     std::to_string(c),
                                 line_no);
            values.push_back(v);
        }

        const std::string_view label_text = trim(fields[label_col]);
        std::size_t label = 0;
        if (schema.label_names.empty()) {
            if (!parse_index(label_text, label))
                throw ParseError("label '" + std::string(label_text) + "' is not a non-negative integer",
                                 line_no);
        } else {
            auto it = std::find(schema.label_names.begin(), schema.label_names.end(), label_text);
            if (it == schema.label_names.end())
                throw ParseError("unknown label '" + std::string(label_text) + "'", line_no);
            label = static_cast<std::size_t>(it - schema.label_names.begin());
        }
        max_label = std::max(max_label, label);
        labels.push_back(label);
    }

    if (labels.empty()) throw ParseError("no samples in '" + path.string() + "'", line_no);
    const std::size_t num_classes =
        schema.label_names.empty() ? max_label + 1 : schema.label_names.size();
    const std::size_t rows = labels.size();
    return Dataset(Matrix(rows, feature_cols.size(), std::move(values)), std::move(labels), num_classes,
                   path.filename().string());
}

void save_delimited(const std::filesystem::path& path, const Dataset& data, bool header, char delimiter) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file '" + path.string() + "'");
    if (header) {
        for (std::size_t c = 0; c < data.dim(); ++c) out << 'x' << c + 1 << delimiter;
        out << "y\n";
    }
    char buf[32];
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.dim(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", data.features()(r, c));
            out << buf << delimiter;
        }
        out << data.labels()[r] << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Generators

Dataset make_two_spirals(std::size_t n_per_class, double noise_std, double turns, std::uint64_t seed) {
    if (n_per_class == 0) throw DomainError("make_two_spirals: n_per_class must be >= 1");
    if (!(noise_std >= 0.0 && std::isfinite(noise_std)))
        throw DomainError("make_two_spirals: noise_std must be >= 0");
    if (!(turns > 0.0 && std::isfinite(turns))) throw DomainError("make_two_spirals: turns must be > 0");

    Rng rng = Rng(seed).derive("two_spirals");
    const double t_max = turns * 2.0 * std::numbers::pi;
    Matrix x(2 * n_per_class, 2);
    std::vector<Label> labels(2 * n_per_class);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            const std::size_t row = 2 * i + c;
            const double t = t_max * std::sqrt(rng.uniform());
            const double r = t / t_max;
            const double angle = t + static_cast<double>(c) * std::numbers::pi;
            // Draw both noise variates unconditionally so noise_std only rescales.
            const double nx = rng.normal();
            const double ny = rng.normal();
            x(row, 0) = r * std::cos(angle) + noise_std * nx;
            x(row, 1) = r * std::sin(angle) + noise_std * ny;
            labels[row] = c;
        }
    }
    return Dataset(std::move(x), std::move(labels), 2, "two_spirals");
}

Dataset make_gaussian_blobs(const std::vector<std::vector<double>>& centers, std::size_t n_per_class,
                            double stddev, std::uint64_t seed) {
    if (centers.size() < 2) throw DomainError("make_gaussian_blobs: need at least 2 centers");
    if (n_per_class == 0) throw DomainError("make_gaussian_blobs: n_per_class must be >= 1");
    if (!(stddev > 0.0 && std::isfinite(stddev))) throw DomainError("make_gaussian_blobs: std must be > 0");
    const std::size_t dim = centers.front().size();
    if (dim == 0) throw DomainError("make_gaussian_blobs: centers must have at least one coordinate");
    for (const auto& c : centers)
        if (c.size() != dim) throw DomainError("make_gaussian_blobs: centers differ in dimension");

    Rng rng = Rng(seed).derive("gaussian_blobs");
    const std::size_t k = centers.size();
    Matrix x(k * n_per_class, dim);
    std::vector<Label> labels(k * n_per_class);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t row = i * k + c;
            for (std::size_t d = 0; d < dim; ++d) x(row, d) = rng.normal(centers[c][d], stddev);
            labels[row] = c;
        }
    }
    return Dataset(std::move(x), std::move(labels), k, "gaussian_blobs");
}

// ---------------------------------------------------------------------------
// Normalization and splitting

Dataset apply_normalization(const Dataset& data, const FeatureStats& stats) {
    if (stats.mean.size() != data.dim() || stats.stddev.size() != data.dim())
        throw ShapeError("apply_normalization: statistics do not match feature count");
    Matrix x = data.features();
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = (x(r, c) - stats.mean[c]) / stats.stddev[c];
    return Dataset(std::move(x), data.labels(), data.num_classes(), data.name());
}

NormalizedSplits normalize_standard(const Dataset& train, const std::vector<Dataset>& others) {
    constexpr double kStdFloor = 1e-8;
    const Matrix& x = train.features();
    const double n = static_cast<double>(x.rows());
    FeatureStats stats;
    stats.mean.assign(x.cols(), 0.0);
    stats.stddev.assign(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) stats.mean[c] += x(r, c);
    for (double& m : stats.mean) m /= n;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - stats.mean[c];
            stats.stddev[c] += d * d;
        }
    }
    for (double& s : stats.stddev) s = std::max(std::sqrt(s / n), kStdFloor);

    std::vector<Dataset> normalized;
    normalized.reserve(others.size());
    for (const Dataset& d : others) normalized.push_back(apply_normalization(d, stats));
    return {apply_normalization(train, stats), std::move(normalized), std::move(stats)};
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw DomainError("split: train_fraction must lie in (0, 1)");
    Rng rng = Rng(spec.seed).derive("split");
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;

    if (!spec.stratified) {
        const auto perm = rng.permutation(data.size());
        const auto n_train =
            static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(data.size())));
        train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, perm.size())));
        test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_idx.size()), perm.end());
    } else {
        std::vector<std::vector<std::size_t>> by_class(data.num_classes());
        for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels()[i]].push_back(i);
        for (auto& members : by_class) {
            rng.shuffle(std::span<std::size_t>(members));
            const auto n_train = static_cast<std::size_t>(
                std::llround(spec.train_fraction * static_cast<double>(members.size())));
            train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
            test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
        }
        rng.shuffle(std::span<std::size_t>(train_idx));
        rng.shuffle(std::span<std::size_t>(test_idx));
    }

    if (train_idx.empty() || test_idx.empty())
        throw DomainError("split: fraction " + std::to_string(spec.train_fraction) + " leaves an empty split of " +
                          std::to_string(data.size()) + " samples");
    return {data.subset(train_idx, data.name() + ".train"), data.subset(test_idx, data.name() + ".test")};
}

}  // namespace ans
