#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ans/config.hpp"
#include "ans/gradcheck.hpp"

namespace ans {

/// Exit codes of the `ans` tool.
enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_runtime = 2 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "ANS_OUT_DIR";

/// Entry point of the `ans` tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SuiteRunStatus {
    std::string variant;
    std::uint64_t seed = 0;
    std::filesystem::path metrics_path;
    bool ok = false;
    std::string error;
    std::optional<double> final_test_acc;
};

struct SuiteOutcome {
    std::vector<SuiteRunStatus> runs;  ///< expansion order
    std::filesystem::path summary_path;
    std::size_t failed() const;
};

/// Runs every (variant, seed) pair on up to `workers` threads, each with its
/// own network, optimizer, RNG streams and log file, then summarizes the logs
/// into `<out_dir>/summary.md`. A failed run is recorded and the rest continue.
SuiteOutcome run_suite(const ExperimentSuite& suite, const std::filesystem::path& out_dir, std::size_t workers,
                       std::ostream* progress = nullptr);

/// "2-4-2" -> input 2, hidden {4}, 2 classes. Throws ConfigError.
Architecture parse_arch(const std::string& spec);

struct GradcheckRequest {
    Architecture arch;
    double gamma = 0.5;
    std::uint64_t seed = 1;
    std::size_t batch = 8;
    GateSettings gates;
    std::string fault_block;  ///< scales this block's analytic gradient by 1.5 when set
};

/// Builds the network, moves the dense biases off zero, draws a random batch
/// and checks every block.
GradcheckReport run_gradcheck(const GradcheckRequest& request);

}  // namespace ans
