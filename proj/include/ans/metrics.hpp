#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "ans/error.hpp"

namespace ans {

/// One line of a metrics log. `batch` is absent on epoch-summary rows.
///
/// JSON field names (one object per line):
///   run_id, kind ("batch" | "epoch"), epoch, batch (null on epoch rows),
///   loss_grad, loss_reg, gamma, accuracy, mean_gate (null without gates),
///   lr, wall_ms, train_acc_full, test_acc (null unless measured)
///
/// On epoch rows `accuracy` is the running train accuracy (correct / seen),
/// `gamma`, `mean_gate` and the losses are means over the epoch's batches.
struct MetricsRecord {
    std::string run_id;
    std::size_t epoch = 0;
    std::optional<std::size_t> batch;
    double loss_grad = 0.0;
    double loss_reg = 0.0;
    double gamma = 0.0;
    double accuracy = 0.0;
    std::optional<double> mean_gate;
    double lr = 0.0;
    double wall_ms = 0.0;
    std::optional<double> train_acc_full;
    std::optional<double> test_acc;

    bool is_epoch_summary() const noexcept { return !batch.has_value(); }

    /// Throws DomainError on non-finite losses or accuracies outside [0, 1].
    void validate() const;

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

std::string to_json_line(const MetricsRecord& record);

/// Throws ParseError on malformed input or missing fields.
MetricsRecord parse_json_line(const std::string& line);

/// Append-only line-delimited writer. Flushes after every epoch summary.
/// One instance per file; distinct files may be written from distinct threads.
class MetricsSink {
public:
    explicit MetricsSink(const std::filesystem::path& path, bool truncate = true);

    const std::filesystem::path& path() const noexcept { return path_; }
    std::size_t written() const noexcept { return written_; }

    /// Throws IoError when the write fails; earlier lines stay intact.
    void append(const MetricsRecord& record);
    void flush();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t written_ = 0;
};

struct ReadResult {
    std::vector<MetricsRecord> records;
    std::size_t malformed = 0;  ///< lines skipped because they did not parse
};

/// Reads every parseable line; a truncated or corrupt line is counted and skipped.
ReadResult read_records(std::istream& in);
ReadResult read_records(const std::filesystem::path& path);

}  // namespace ans
