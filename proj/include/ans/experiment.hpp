#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "ans/data.hpp"
#include "ans/training.hpp"

namespace ans {

/// Library version recorded in manifests.
const char* version();

/// Train and optional test set for a config, normalized with training
/// statistics when `data.normalize` is set.
///
/// Generated sources draw the two sets from independent streams of
/// `data.seed`; `file` sources load `train_path` and either `test_path` or a
/// seeded split of the training file.
struct PreparedData {
    Dataset train;
    std::optional<Dataset> test;
};

PreparedData prepare_data(const DataSpec& spec);

/// Hash of both splits, "train=<hex>;test=<hex>" ("test=none" without one).
std::string data_fingerprint(const PreparedData& data);

/// Run manifest written next to the metrics log:
///
///   { "run_id", "version", "seed", "started_utc", "dataset_fingerprint",
///     "config": { "section": { "key": "value", ... }, ... } }
///
/// `config` holds every key of the canonical echo as strings, so
/// `config_from_manifest` rebuilds the exact config.
nlohmann::ordered_json make_manifest(const TrainConfig& cfg, const std::string& fingerprint,
                                     const std::string& started_utc);
TrainConfig config_from_manifest(const nlohmann::ordered_json& manifest);
/// Loads `path` as a manifest when it ends in ".json", else as a config file
/// layered on `base`.
TrainConfig load_config_or_manifest(const std::filesystem::path& path, const TrainConfig& base);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

struct ExperimentResult {
    TrainResult train;
    std::filesystem::path metrics_path;
    std::filesystem::path manifest_path;
    std::string fingerprint;
};

/// Prepares data, builds the network, trains, and writes
/// `<out_dir>/<stem>.metrics.jsonl` and `<out_dir>/<stem>.manifest.json`.
/// The manifest is written before training starts; the metrics log is
/// flushed per epoch, so an aborted run leaves the completed epochs behind.
/// Progress lines go to `log` when given.
ExperimentResult run_experiment(const TrainConfig& cfg, const std::filesystem::path& out_dir,
                                const std::string& stem, std::ostream* log = nullptr);

/// Replaces characters that are awkward in file names (':' '/' '\\' ' ').
std::string file_stem(const std::string& run_id);

}  // namespace ans
