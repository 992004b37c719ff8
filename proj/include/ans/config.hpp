#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ans/training.hpp"

namespace ans {

/// Experiment config text format.
///
///   # comment            ('#' or ';' in the first non-blank column)
///   [section]
///   key = value
///
/// Sections and keys are lower case. Every key belongs to exactly one section
/// (see `config_keys()`); unknown sections, unknown keys, duplicate keys and
/// keys outside a section are errors. Values are trimmed; lists are comma
/// separated; booleans are `true` / `false`; `data.centers` separates points
/// with ';' ("-2,0; 2,0"). An empty list value means "default" where noted.
///
/// Keys not given keep their value in the base config (the desk preset by
/// default), so a config file is a set of overrides on top of a preset.
/// Comments are whole lines only; '#' inside a value is literal.
struct ConfigKey {
    std::string name;  ///< "section.key"
    std::string help;
};

const std::vector<ConfigKey>& config_keys();

/// Named built-in configs: "desk" and "paper".
TrainConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// Sets one key from its text form. Throws ConfigError naming the key.
void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);
/// Text form of one key, suitable for `set_config_value`.
std::string get_config_value(const TrainConfig& cfg, std::string_view key);

/// Applies "section.key=value". Throws ConfigError on a missing '='.
void apply_override(TrainConfig& cfg, std::string_view assignment);

/// Raw parse: (section, key, value, line) entries in file order. Throws
/// ParseError on grammar errors.
struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
};
std::vector<ConfigEntry> parse_config_text(std::string_view text);

/// Parses a full experiment config and validates it.
TrainConfig parse_config(std::string_view text, const TrainConfig& base = preset_config("desk"));
TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base = preset_config("desk"));

/// Every key, defaults included, in `config_keys()` order and the same
/// grammar `parse_config` accepts. parse_config(echo_config(c)) == c.
std::string echo_config(const TrainConfig& cfg);

/// Field-by-field equality through the canonical text form.
bool same_config(const TrainConfig& a, const TrainConfig& b);

/// A named list of overrides applied on top of a suite's base config.
struct SuiteVariant {
    std::string name;
    std::vector<std::pair<std::string, std::string>> overrides;  ///< ("section.key", value)
};

/// Suite file: the experiment sections give the shared base, plus
///
///   [suite]
///   name = comparison
///   seeds = 1,2,3,4,5
///
///   [variant vanilla]
///   model.regularizer = none
///
/// Variant names are unique and use [A-Za-z0-9_.-].
struct ExperimentSuite {
    std::string name;
    TrainConfig base;
    std::vector<SuiteVariant> variants;
    std::vector<std::uint64_t> seeds;

    /// Throws ConfigError when a variant does not produce a valid config.
    void validate() const;
};

struct PlannedRun {
    std::string variant;
    std::uint64_t seed = 0;
    TrainConfig config;  ///< run.id = "variant:seed"
    /// Output file stem, "variant.seed<N>".
    std::string stem() const;
};

/// Variant-major expansion of variants x seeds.
std::vector<PlannedRun> expand_suite(const ExperimentSuite& suite);

ExperimentSuite parse_suite(std::string_view text, const TrainConfig& base = preset_config("desk"));
ExperimentSuite load_suite(const std::filesystem::path& path, const TrainConfig& base = preset_config("desk"));
/// Built-in suites: "comparison" and "ablation".
ExperimentSuite preset_suite(std::string_view name);
std::vector<std::string> suite_preset_names();
/// Suite file text; parse_suite(echo_suite(s)) reproduces s.
std::string echo_suite(const ExperimentSuite& suite);

}  // namespace ans
