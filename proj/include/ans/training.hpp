#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ans/data.hpp"
#include "ans/metrics.hpp"
#include "ans/network.hpp"
#include "ans/optimizer.hpp"
#include "ans/regularization.hpp"

namespace ans {

/// Where the data for a run comes from.
struct DataSpec {
    enum class Source { spirals, blobs, file };

    Source source = Source::spirals;
    std::uint64_t seed = 1234;  ///< data seed, independent of the run seed
    // spirals / blobs
    std::size_t train_size = 200;
    std::size_t test_size = 2000;
    double noise = 0.2;
    double turns = 1.0;
    std::vector<std::vector<double>> centers{{-2.0, 0.0}, {2.0, 0.0}};
    double blob_std = 1.0;
    // file
    std::string train_path;
    std::string test_path;  ///< empty: split train_path with split_fraction
    DelimitedSchema schema;
    double split_fraction = 0.8;
    bool stratified = true;

    bool normalize = true;
};

/// One experiment's full recipe.
struct TrainConfig {
    std::string run_id = "run";
    std::uint64_t seed = 1;

    DataSpec data;
    Architecture arch;
    GateSettings gates;

    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    LrSchedule lr{0.05, {120, 160}, 0.1};
    double momentum = 0.9;
    double weight_decay = 1e-4;
    bool decay_biases = true;

    bool eval_test = true;         ///< test accuracy on every epoch summary
    bool full_train_eval = false;  ///< exact train accuracy pass on every epoch summary
    bool record_wall_time = true;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// Cross-entropy, penalty and accuracy of one forward pass.
struct ObjectiveTerms {
    double loss_grad = 0.0;
    RegReport reg;
    std::size_t correct = 0;
    std::size_t batch_size = 0;
    Matrix grad_input;  ///< dJ/dx for the batch

    double accuracy() const noexcept { return static_cast<double>(correct) / static_cast<double>(batch_size); }
    double total() const noexcept { return loss_grad + reg.l_reg_total; }
};

struct BatchResult {
    double loss_grad = 0.0;
    double loss_reg = 0.0;
    double accuracy = 0.0;  ///< M = correct / batch_size
    double gamma = 0.0;
    std::size_t correct = 0;
    std::size_t batch_size = 0;
    std::optional<double> mean_gate;
};

/// Objective J = L_grad + L_reg at a fixed gamma; forward only, no caches
/// needed afterwards.
double objective(Network& net, const Matrix& x, std::span<const Label> y, double gamma,
                 const GateSettings& settings);

/// Zeroes gradients, runs forward, measures M, computes gamma (from the
/// schedule, or `fixed_gamma` when given), the penalty, and backpropagates J.
ObjectiveTerms forward_backward(Network& net, const Matrix& x, std::span<const Label> y,
                                const GateSettings& settings, std::optional<double> fixed_gamma = {});

/// One optimization step of the joint objective. Requires train mode.
/// Gamma is computed from the accuracy of this same forward pass, before the
/// update. Networks without gates report gamma = 0.
BatchResult train_batch(Network& net, const Matrix& x, std::span<const Label> y, const GateSettings& settings,
                        SgdState& opt, bool decay_biases = true);

/// Fraction of correct argmax predictions. Runs in eval mode and restores the
/// previous mode; parameters and training RNG streams are untouched.
double evaluate(Network& net, const Dataset& data);

/// Initialization stream for `seed`; both `train` and callers building the
/// network themselves use it so runs replay exactly.
Network make_network(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes);

struct TrainResult {
    std::vector<MetricsRecord> records;
    double final_train_acc = 0.0;
    std::optional<double> final_test_acc;
};

using RecordCallback = std::function<void(const MetricsRecord&)>;

/// Runs the epoch/batch loop: reshuffle each epoch with the seeded stream,
/// set lr for the epoch, train every batch including a trailing partial one,
/// and emit one record per batch plus an epoch summary. Throws TrainingError
/// naming the batch if the objective turns non-finite.
TrainResult train(Network& net, const Dataset& train_data, const TrainConfig& cfg, const Dataset* test_data = nullptr,
                  const RecordCallback& on_record = {});

}  // namespace ans
