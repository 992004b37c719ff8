#include "ans/layers.hpp"

#include <cmath>
#include <string>

#include "ans/error.hpp"
#include "ans/ops.hpp"

namespace ans {

namespace {

const Matrix& cached(const std::optional<Matrix>& m, const char* layer) {
    if (!m) throw StateError(std::string(layer) + ": backward called before forward");
    return *m;
}

void require_width(const Matrix& x, std::size_t width, const char* layer) {
    if (x.cols() != width) {
        throw ShapeError(std::string(layer) + ": expected " + std::to_string(width) +
                         " input columns, got " + x.shape_string());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseLayer

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim)
    : DenseLayer(Matrix(out_dim, in_dim), Matrix(1, out_dim)) {}

DenseLayer::DenseLayer(Matrix weights, Matrix bias)
    : weights_(std::move(weights)),
      bias_(std::move(bias)),
      grad_weights_(weights_.rows(), weights_.cols()),
      grad_bias_(1, weights_.rows()) {
    if (weights_.empty()) throw ShapeError("DenseLayer: empty weight matrix");
    if (bias_.rows() != 1 || bias_.cols() != weights_.rows()) {
        throw ShapeError("DenseLayer: bias " + bias_.shape_string() + " does not match weights " +
                         weights_.shape_string());
    }
}

DenseLayer DenseLayer::he_normal(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    DenseLayer layer(in_dim, out_dim);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_dim));
    for (double& w : layer.weights_.data()) w = rng.normal(0.0, stddev);
    return layer;
}

Matrix DenseLayer::forward(const Matrix& x) {
    require_width(x, in_dim(), "DenseLayer::forward");
    Matrix y = add_row_bias(matmul_transposed(x, weights_), bias_);
    cache_x_ = x;
    cache_y_ = y;
    return y;
}

Matrix DenseLayer::backward(const Matrix& upstream) {
    const Matrix& x = cached(cache_x_, "DenseLayer");
    require_same_shape(upstream, cached(cache_y_, "DenseLayer"), "DenseLayer::backward");

    const Matrix gw = transposed_matmul(upstream, x);
    const Matrix gb = column_sums(upstream);
    auto dst_w = grad_weights_.data();
    auto src_w = gw.data();
    for (std::size_t i = 0; i < dst_w.size(); ++i) dst_w[i] += src_w[i];
    auto dst_b = grad_bias_.data();
    auto src_b = gb.data();
    for (std::size_t i = 0; i < dst_b.size(); ++i) dst_b[i] += src_b[i];

    return matmul(upstream, weights_);
}

void DenseLayer::zero_grad() {
    grad_weights_.fill(0.0);
    grad_bias_.fill(0.0);
}

// ---------------------------------------------------------------------------
// ReluLayer

Matrix ReluLayer::forward(const Matrix& y) {
    require_width(y, width_, "ReluLayer::forward");
    cache_y_ = y;
    return relu(y);
}

Matrix ReluLayer::backward(const Matrix& upstream) {
    return relu_backward(cached(cache_y_, "ReluLayer"), upstream);
}

// ---------------------------------------------------------------------------
// AnsGateLayer

AnsGateLayer::AnsGateLayer(std::size_t k) : AnsGateLayer(Matrix(k, k), Matrix(1, k)) {}

AnsGateLayer::AnsGateLayer(Matrix weights, Matrix bias)
    : weights_(std::move(weights)),
      bias_(std::move(bias)),
      grad_weights_(weights_.rows(), weights_.cols()),
      grad_bias_(1, weights_.rows()) {
    const std::size_t k = weights_.rows();
    if (k == 0 || weights_.cols() != k) {
        throw ShapeError("AnsGateLayer: W_a must be square and non-empty, got " +
                         weights_.shape_string());
    }
    if (bias_.rows() != 1 || bias_.cols() != k) {
        throw ShapeError("AnsGateLayer: b_a " + bias_.shape_string() + " does not match k = " +
                         std::to_string(k));
    }
}

AnsGateLayer AnsGateLayer::xavier_uniform(std::size_t k, Rng& rng) {
    AnsGateLayer layer(k);
    const double limit = std::sqrt(6.0 / static_cast<double>(k + k));
    for (double& w : layer.weights_.data()) w = rng.uniform(-limit, limit);
    return layer;
}

Matrix AnsGateLayer::forward(const Matrix& a) {
    require_width(a, width(), "AnsGateLayer::forward");
    Matrix z = add_row_bias(matmul_transposed(a, weights_), bias_);
    Matrix g = sigmoid(z);
    Matrix out = hadamard(g, a);
    cache_a_ = a;
    cache_z_ = std::move(z);
    cache_g_ = std::move(g);
    return out;
}

Matrix AnsGateLayer::backward(const Matrix& upstream, const Matrix& reg_grad_z, GateGradient mode) {
    const Matrix& a = cached(cache_a_, "AnsGateLayer");
    const Matrix& g = cached(cache_g_, "AnsGateLayer");
    require_same_shape(upstream, g, "AnsGateLayer::backward upstream");
    require_same_shape(reg_grad_z, g, "AnsGateLayer::backward reg_grad_z");

    // Gradient at z from the prediction loss alone.
    Matrix s_pred(g.rows(), g.cols());
    {
        auto u = upstream.data();
        auto av = a.data();
        auto gv = g.data();
        auto s = s_pred.data();
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = u[i] * av[i] * gv[i] * (1.0 - gv[i]);
    }
    Matrix s_total = s_pred;
    {
        auto s = s_total.data();
        auto r = reg_grad_z.data();
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += r[i];
    }

    const Matrix gw = transposed_matmul(s_total, a);
    const Matrix gb = column_sums(s_total);
    auto dst_w = grad_weights_.data();
    auto src_w = gw.data();
    for (std::size_t i = 0; i < dst_w.size(); ++i) dst_w[i] += src_w[i];
    auto dst_b = grad_bias_.data();
    auto src_b = gb.data();
    for (std::size_t i = 0; i < dst_b.size(); ++i) dst_b[i] += src_b[i];

    Matrix grad_a = hadamard(upstream, g);
    const Matrix through_z = matmul(mode == GateGradient::full ? s_total : s_pred, weights_);
    auto ga = grad_a.data();
    auto tz = through_z.data();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += tz[i];
    require_finite(grad_a, "AnsGateLayer::backward");
    return grad_a;
}

void AnsGateLayer::zero_grad() {
    grad_weights_.fill(0.0);
    grad_bias_.fill(0.0);
}

const Matrix& AnsGateLayer::gates() const {
    if (!cache_g_) throw StateError("AnsGateLayer: no cached gates, forward has not run");
    return *cache_g_;
}

const Matrix& AnsGateLayer::pre_activations() const {
    if (!cache_z_) throw StateError("AnsGateLayer: no cached pre-activations, forward has not run");
    return *cache_z_;
}

void AnsGateLayer::saturate(double bias) {
    weights_.fill(0.0);
    bias_.fill(bias);
}

// ---------------------------------------------------------------------------
// DropoutLayer

DropoutLayer::DropoutLayer(std::size_t width, double rate) : width_(width), rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw DomainError("DropoutLayer: rate must lie in [0, 1), got " + std::to_string(rate));
    }
}

Matrix DropoutLayer::forward(const Matrix& x, Rng& rng) {
    require_width(x, width_, "DropoutLayer::forward");
    if (mode_ == Mode::eval) {
        last_forward_masked_ = false;
        return x;
    }
    const bool reuse = frozen_ && mask_ && mask_->same_shape(x);
    if (!reuse) {
        Matrix mask(x.rows(), x.cols(), 1.0);
        if (rate_ > 0.0) {
            const double keep_scale = scale();
            for (double& m : mask.data()) m = rng.bernoulli(rate_) ? 0.0 : keep_scale;
        }
        mask_ = std::move(mask);
    }
    last_forward_masked_ = true;
    return hadamard(x, *mask_);
}

Matrix DropoutLayer::backward(const Matrix& upstream) {
    if (!last_forward_masked_) return upstream;
    return hadamard(upstream, *mask_);
}

const Matrix& DropoutLayer::mask() const {
    if (!mask_) throw StateError("DropoutLayer: no mask drawn yet");
    return *mask_;
}

}  // namespace ans
