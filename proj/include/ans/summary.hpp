#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ans/metrics.hpp"

namespace ans {

/// Final numbers for one run, taken from its epoch-summary rows.
struct RunSummary {
    std::string run_id;
    std::string variant;  ///< run_id up to the last ':' (the whole id when there is none)
    std::size_t epochs = 0;
    double final_train_acc = 0.0;  ///< full-pass accuracy when logged, else the running one
    std::optional<double> final_test_acc;
    std::optional<double> best_test_acc;
    double mean_gamma = 0.0;                 ///< mean of the per-epoch gamma means
    std::vector<double> gamma_trajectory;    ///< per-epoch gamma means, in epoch order
    std::optional<double> final_mean_gate;   ///< absent for runs without gates
};

struct MeanStd {
    double mean = 0.0;
    std::optional<double> stddev;  ///< sample std (n - 1); absent for a single value
    std::size_t count = 0;
};

/// Seed-aggregated view of one variant.
struct VariantSummary {
    std::string variant;
    std::size_t runs = 0;
    MeanStd final_train_acc;
    std::optional<MeanStd> final_test_acc;
    std::optional<MeanStd> best_test_acc;
    MeanStd mean_gamma;
    std::optional<MeanStd> final_mean_gate;
};

struct Summary {
    std::vector<RunSummary> runs;          ///< input order
    std::vector<VariantSummary> variants;  ///< first-appearance order
    std::size_t malformed_lines = 0;
};

/// Sample mean and (n - 1) standard deviation.
MeanStd mean_std(std::span<const double> values);

/// Aggregates run logs. Each inner vector is one run's records; records of a
/// run that carry several run_ids are split by id. Runs with no epoch rows
/// are dropped. Throws DomainError when nothing summarizable remains.
Summary summarize(std::span<const std::vector<MetricsRecord>> runs);

/// Reads each file with read_records and summarizes; malformed lines are counted.
Summary summarize_files(std::span<const std::string> paths);

/// Markdown tables: per-variant aggregate, then per-run detail. Absent values
/// render as blank cells.
std::string render_markdown(const Summary& summary);

}  // namespace ans
