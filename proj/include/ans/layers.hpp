#pragma once

#include <cstddef>
#include <optional>

#include "ans/matrix.hpp"
#include "ans/rng.hpp"

namespace ans {

enum class Mode { train, eval };

/// How much of the gate-penalty gradient flows back out of an ANS layer.
enum class GateGradient {
    full,    ///< penalty gradient reaches the gate parameters and earlier layers
    detach,  ///< penalty gradient updates W_a, b_a only; stopped at the gate input
};

/// Fully connected layer, y = x W^T + b. Returns the pre-activation; the
/// network applies the nonlinearity as a separate step.
class DenseLayer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim);
    DenseLayer(Matrix weights, Matrix bias);

    /// He-normal weights (std = sqrt(2 / in_dim)), zero bias.
    static DenseLayer he_normal(std::size_t in_dim, std::size_t out_dim, Rng& rng);

    std::size_t in_dim() const noexcept { return weights_.cols(); }
    std::size_t out_dim() const noexcept { return weights_.rows(); }

    Matrix forward(const Matrix& x);

    /// Accumulates grad_W += upstream^T x and grad_b += colsum(upstream);
    /// returns upstream W. Uses the most recent forward's cache.
    Matrix backward(const Matrix& upstream);

    void zero_grad();

    Matrix& weights() noexcept { return weights_; }
    const Matrix& weights() const noexcept { return weights_; }
    Matrix& bias() noexcept { return bias_; }
    const Matrix& bias() const noexcept { return bias_; }
    Matrix& grad_weights() noexcept { return grad_weights_; }
    const Matrix& grad_weights() const noexcept { return grad_weights_; }
    Matrix& grad_bias() noexcept { return grad_bias_; }
    const Matrix& grad_bias() const noexcept { return grad_bias_; }

private:
    Matrix weights_;  // out x in
    Matrix bias_;     // 1 x out
    Matrix grad_weights_;
    Matrix grad_bias_;
    std::optional<Matrix> cache_x_;
    std::optional<Matrix> cache_y_;
};

/// Elementwise ReLU step between a dense layer and whatever follows it.
class ReluLayer {
public:
    explicit ReluLayer(std::size_t width) : width_(width) {}

    std::size_t width() const noexcept { return width_; }
    Matrix forward(const Matrix& y);
    Matrix backward(const Matrix& upstream);

private:
    std::size_t width_;
    std::optional<Matrix> cache_y_;
};

/// Self-attention gate over k activated neurons:
///
///   z = a W_a^T + b_a,   g = sigmoid(z),   out = g * a   (elementwise)
///
/// `a` is the post-activation output of the preceding hidden layer. The gate
/// stays active in eval mode; it is deterministic, so there is nothing to
/// switch off.
class AnsGateLayer {
public:
    explicit AnsGateLayer(std::size_t k);
    AnsGateLayer(Matrix weights, Matrix bias);

    /// Xavier-uniform W_a, zero b_a, so gates start near 0.5.
    static AnsGateLayer xavier_uniform(std::size_t k, Rng& rng);

    std::size_t width() const noexcept { return weights_.rows(); }

    Matrix forward(const Matrix& a);

    /// `reg_grad_z` is dL_reg/dz for the cached batch (all zero when gamma is 0).
    /// With s = upstream * a * g(1-g) + reg_grad_z, accumulates grad_W_a += s^T a
    /// and grad_b_a += colsum(s), and returns upstream * g + s W_a. In detach
    /// mode the returned input gradient omits the reg_grad_z term.
    Matrix backward(const Matrix& upstream, const Matrix& reg_grad_z,
                    GateGradient mode = GateGradient::full);

    void zero_grad();

    bool has_cache() const noexcept { return cache_g_.has_value(); }
    /// Gate values g(z) from the last forward. Throws StateError before any forward.
    const Matrix& gates() const;
    const Matrix& pre_activations() const;

    /// Test hook: W_a = 0 and b_a = `bias`, so every gate equals sigmoid(bias).
    /// At the default bias sigmoid rounds to exactly 1.0.
    void saturate(double bias = 40.0);

    Matrix& weights() noexcept { return weights_; }
    const Matrix& weights() const noexcept { return weights_; }
    Matrix& bias() noexcept { return bias_; }
    const Matrix& bias() const noexcept { return bias_; }
    Matrix& grad_weights() noexcept { return grad_weights_; }
    const Matrix& grad_weights() const noexcept { return grad_weights_; }
    Matrix& grad_bias() noexcept { return grad_bias_; }
    const Matrix& grad_bias() const noexcept { return grad_bias_; }

private:
    Matrix weights_;  // k x k
    Matrix bias_;     // 1 x k
    Matrix grad_weights_;
    Matrix grad_bias_;
    std::optional<Matrix> cache_a_;
    std::optional<Matrix> cache_z_;
    std::optional<Matrix> cache_g_;
};

/// Inverted dropout: in train mode each unit is kept with probability 1 - p and
/// scaled by 1 / (1 - p); eval mode is the identity.
class DropoutLayer {
public:
    DropoutLayer(std::size_t width, double rate);

    std::size_t width() const noexcept { return width_; }
    double rate() const noexcept { return rate_; }
    double scale() const noexcept { return 1.0 / (1.0 - rate_); }

    void set_mode(Mode mode) noexcept { mode_ = mode; }
    Mode mode() const noexcept { return mode_; }

    /// Reuse the last mask instead of drawing a new one (gradient checking).
    void set_frozen(bool frozen) noexcept { frozen_ = frozen; }

    Matrix forward(const Matrix& x, Rng& rng);
    Matrix backward(const Matrix& upstream);

    /// Entries are 0 or scale(). Throws StateError before any train-mode forward.
    const Matrix& mask() const;

private:
    std::size_t width_;
    double rate_;
    Mode mode_ = Mode::train;
    bool frozen_ = false;
    bool last_forward_masked_ = false;
    std::optional<Matrix> mask_;
};

}  // namespace ans
