#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ans/layers.hpp"
#include "ans/optimizer.hpp"
#include "ans/regularization.hpp"
#include "ans/rng.hpp"

namespace ans {

using Layer = std::variant<DenseLayer, ReluLayer, AnsGateLayer, DropoutLayer>;

enum class RegularizerKind { none, dropout, ans };

/// Penalty settings shared by every gate in a network.
struct GateSettings {
    GammaSchedule schedule;
    GateGradient gradient = GateGradient::full;
    RegNormalization normalization = RegNormalization::batch_mean;
};

/// MLP shape plus where the regularizer goes.
struct Architecture {
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden{64, 64};
    std::size_t num_classes = 2;
    RegularizerKind regularizer = RegularizerKind::ans;
    double dropout_rate = 0.5;
    /// Hidden-layer indices that receive the gate or dropout; empty means all.
    std::vector<std::size_t> regularized_layers;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Ordered layer stack ending in a logits layer that feeds softmax
/// cross-entropy. Construction checks that adjacent widths agree, that the
/// stack ends in a DenseLayer, and that gates and dropout only follow a ReLU
/// (possibly through other gate/dropout layers).
class Network {
public:
    explicit Network(std::vector<Layer> layers, std::uint64_t dropout_seed = 0);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }

    void set_mode(Mode mode);
    Mode mode() const noexcept { return mode_; }

    /// Logits for a batch. Caches what backward needs.
    Matrix forward(const Matrix& x);

    /// Backpropagates d(loss)/d(logits) through the stack, seeding every gate
    /// with its penalty gradient at the given gamma. Gradients accumulate.
    /// Returns d(objective)/d(input).
    Matrix backward(const Matrix& grad_logits, double gamma, const GateSettings& settings);

    void zero_grad();

    /// Parameters in stack order, named "dense0.W", "dense0.b", "gate0.W_a", ...
    /// Biases carry decay == decay_biases.
    std::vector<ParamRef> parameters(bool decay_biases = true);

    std::vector<AnsGateLayer*> gate_layers();
    std::vector<const AnsGateLayer*> gate_layers() const;
    bool has_gates() const;
    /// Cached gate matrices of the last forward, one per gated layer.
    std::vector<const Matrix*> cached_gates() const;

    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    /// Freeze or thaw every dropout mask (see DropoutLayer::set_frozen).
    void freeze_dropout(bool frozen);

    /// Test hook: after every backward, multiply the gradient of the named
    /// parameter block by `factor`. Lets diagnostics prove they catch a bad backward.
    void inject_gradient_fault(std::string block, double factor);

private:
    std::vector<Layer> layers_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    Mode mode_ = Mode::train;
    Rng dropout_rng_;
    std::optional<std::pair<std::string, double>> fault_;
};

/// Builds dense -> relu -> [gate | dropout] blocks for each hidden width and a
/// final dense logits layer. Weights come from `init`.
Network build_network(const Architecture& arch, Rng& init, std::uint64_t dropout_seed);

/// Builds the same dense weights as `build_network` but with no gates or dropout.
Network build_vanilla_twin(const Network& net);

}  // namespace ans
