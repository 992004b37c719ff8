#include <gtest/gtest.h>

#include <cmath>

#include "ans/error.hpp"
#include "ans/layers.hpp"
#include "ans/ops.hpp"
#include "support/oracles.hpp"

using namespace ans;

namespace {

// Central differences at h = 1e-6 carry ~1e-10 absolute rounding noise on
// these O(1) probes, so relative agreement is checked at 1e-5.

// Scalar probe L = sum(R * out): its gradient w.r.t. out is exactly R.
double probe(const Matrix& out, const Matrix& r) {
    long double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += static_cast<long double>(out.data()[i]) * r.data()[i];
    return static_cast<double>(s);
}

}  // namespace

TEST(Dense, ForwardIsAffineMapOverTheBatch) {
    const Matrix w = oracle::random_matrix(3, 4, 1);
    const Matrix b = oracle::random_matrix(1, 3, 2);
    const Matrix x = oracle::random_matrix(5, 4, 3);
    DenseLayer layer(w, b);
    Matrix expected = oracle::matmul(x, oracle::transpose(w));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) expected(i, j) += b(0, j);
    EXPECT_LT(oracle::max_abs_diff(layer.forward(x), expected), 1e-14);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
    DenseLayer layer(oracle::random_matrix(3, 4, 1), oracle::random_matrix(1, 3, 2));
    Matrix x = oracle::random_matrix(5, 4, 3);
    const Matrix r = oracle::random_matrix(5, 3, 4);
    layer.forward(x);
    const Matrix grad_x = layer.backward(r);
    auto loss = [&] { return probe(layer.forward(x), r); };
    EXPECT_LT(oracle::max_rel_diff(layer.grad_weights(), oracle::numeric_gradient(layer.weights(), loss)), 1e-5);
    EXPECT_LT(oracle::max_rel_diff(layer.grad_bias(), oracle::numeric_gradient(layer.bias(), loss)), 1e-5);
    EXPECT_LT(oracle::max_rel_diff(grad_x, oracle::numeric_gradient(x, loss)), 1e-5);
}

TEST(Dense, GradientsAccumulateUntilZeroed) {
    DenseLayer layer(oracle::random_matrix(2, 2, 1), Matrix(1, 2));
    const Matrix x = oracle::random_matrix(3, 2, 2);
    const Matrix r = oracle::random_matrix(3, 2, 3);
    layer.forward(x);
    layer.backward(r);
    const Matrix once = layer.grad_weights();
    layer.backward(r);
    for (std::size_t i = 0; i < once.size(); ++i)
        EXPECT_DOUBLE_EQ(layer.grad_weights().data()[i], 2 * once.data()[i]);
    layer.zero_grad();
    EXPECT_EQ(layer.grad_weights(), Matrix(2, 2));
}

TEST(Dense, BackwardBeforeForwardIsAStateError) {
    DenseLayer layer(2, 3);
    EXPECT_THROW(layer.backward(Matrix(1, 3)), StateError);
    EXPECT_THROW(layer.forward(Matrix(1, 5)), ShapeError);
}

TEST(Dense, HeNormalScale) {
    Rng rng(3);
    const DenseLayer layer = DenseLayer::he_normal(200, 100, rng);
    double s2 = 0;
    for (double w : layer.weights().data()) s2 += w * w;
    EXPECT_NEAR(s2 / layer.weights().size(), 2.0 / 200, 0.0006);
    EXPECT_EQ(layer.bias(), Matrix(1, 100));
}

TEST(Relu, ForwardBackward) {
    ReluLayer relu_layer(3);
    const Matrix y{{-1, 0.5, 2}};
    EXPECT_EQ(relu_layer.forward(y), (Matrix{{0, 0.5, 2}}));
    EXPECT_EQ(relu_layer.backward(Matrix{{1, 1, 1}}), (Matrix{{0, 1, 1}}));
}

TEST(Gate, ForwardMultipliesActivationsBySigmoidOfAffineMap) {
    const Matrix w = oracle::random_matrix(3, 3, 1);
    const Matrix b = oracle::random_matrix(1, 3, 2);
    const Matrix a = oracle::random_matrix(4, 3, 3, 2.0);
    AnsGateLayer gate(w, b);
    const Matrix out = gate.forward(a);
    const Matrix z = oracle::matmul(a, oracle::transpose(w));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double g = oracle::sigmoid(z(i, j) + b(0, j));
            EXPECT_NEAR(gate.gates()(i, j), g, 1e-15);
            EXPECT_NEAR(out(i, j), g * a(i, j), 1e-15);
        }
}

TEST(Gate, BackwardWithPenaltyMatchesFiniteDifferences) {
    AnsGateLayer gate(oracle::random_matrix(4, 4, 5), oracle::random_matrix(1, 4, 6));
    Matrix a = oracle::random_matrix(3, 4, 7, 1.5);
    const Matrix r = oracle::random_matrix(3, 4, 8);
    const double c = 0.37;  // penalty c * sum(g)
    auto loss = [&] {
        const Matrix out = gate.forward(a);
        return probe(out, r) + c * gate.gates().sum();
    };
    gate.forward(a);
    Matrix reg(3, 4);
    for (std::size_t i = 0; i < reg.size(); ++i) {
        const double g = gate.gates().data()[i];
        reg.data()[i] = c * g * (1 - g);
    }
    const Matrix grad_a = gate.backward(r, reg);
    EXPECT_LT(oracle::max_rel_diff(gate.grad_weights(), oracle::numeric_gradient(gate.weights(), loss)), 1e-5);
    EXPECT_LT(oracle::max_rel_diff(gate.grad_bias(), oracle::numeric_gradient(gate.bias(), loss)), 1e-5);
    EXPECT_LT(oracle::max_rel_diff(grad_a, oracle::numeric_gradient(a, loss)), 1e-5);
}

TEST(Gate, DetachDropsOnlyThePenaltyPathIntoTheInput) {
    const Matrix w = oracle::random_matrix(3, 3, 1);
    const Matrix b = oracle::random_matrix(1, 3, 2);
    const Matrix a = oracle::random_matrix(2, 3, 3);
    const Matrix r = oracle::random_matrix(2, 3, 4);
    const Matrix reg = oracle::random_matrix(2, 3, 5, 0.1);
    AnsGateLayer full(w, b), detached(w, b);
    full.forward(a);
    detached.forward(a);
    const Matrix gf = full.backward(r, reg, GateGradient::full);
    const Matrix gd = detached.backward(r, reg, GateGradient::detach);
    EXPECT_EQ(full.grad_weights(), detached.grad_weights());
    EXPECT_EQ(full.grad_bias(), detached.grad_bias());
    const Matrix diff = oracle::matmul(reg, w);
    for (std::size_t i = 0; i < gf.size(); ++i) EXPECT_NEAR(gf.data()[i] - gd.data()[i], diff.data()[i], 1e-14);
}

TEST(Gate, SaturatedGateIsExactIdentity) {
    Rng rng(1);
    AnsGateLayer gate = AnsGateLayer::xavier_uniform(5, rng);
    gate.saturate();
    const Matrix a = oracle::random_matrix(6, 5, 9, 10.0);
    const Matrix out = gate.forward(a);
    EXPECT_EQ(out, a);
    for (double g : gate.gates().data()) EXPECT_EQ(g, 1.0);
}

TEST(Gate, XavierInitStartsGatesNearHalf) {
    Rng rng(2);
    AnsGateLayer gate = AnsGateLayer::xavier_uniform(16, rng);
    const double bound = std::sqrt(6.0 / 32.0);
    for (double w : gate.weights().data()) EXPECT_LE(std::abs(w), bound);
    EXPECT_EQ(gate.bias(), Matrix(1, 16));
    gate.forward(Matrix(2, 16));
    for (double g : gate.gates().data()) EXPECT_EQ(g, 0.5);
}

TEST(Gate, AccessorsBeforeForwardAreStateErrors) {
    AnsGateLayer gate(3);
    EXPECT_FALSE(gate.has_cache());
    EXPECT_THROW(gate.gates(), StateError);
    EXPECT_THROW(gate.pre_activations(), StateError);
    EXPECT_THROW(gate.backward(Matrix(1, 3), Matrix(1, 3)), StateError);
    EXPECT_THROW(AnsGateLayer(Matrix(2, 3), Matrix(1, 2)), ShapeError);
}

TEST(Dropout, RejectsRatesOutsideUnitInterval) {
    EXPECT_THROW(DropoutLayer(4, 1.0), DomainError);
    EXPECT_THROW(DropoutLayer(4, -0.1), DomainError);
    EXPECT_NO_THROW(DropoutLayer(4, 0.0));
}

TEST(Dropout, TrainMaskIsZeroOrInverseKeepProbability) {
    DropoutLayer d(50, 0.3);
    Rng rng(4);
    const Matrix x(20, 50, 2.0);
    const Matrix y = d.forward(x, rng);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double m = d.mask().data()[i];
        EXPECT_TRUE(m == 0.0 || m == 1.0 / 0.7);
        EXPECT_EQ(y.data()[i], 2.0 * m);
    }
    const Matrix up(20, 50, 3.0);
    const Matrix back = d.backward(up);
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back.data()[i], 3.0 * d.mask().data()[i]);
}

TEST(Dropout, InvertedScalingPreservesTheMean) {
    DropoutLayer d(8, 0.5);
    Rng rng(2024);
    const Matrix ones(1, 8, 1.0);
    std::vector<double> sums(8, 0.0);
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        const Matrix y = d.forward(ones, rng);
        for (std::size_t j = 0; j < 8; ++j) sums[j] += y(0, j);
    }
    for (double s : sums) {
        EXPECT_GE(s / draws, 0.97);
        EXPECT_LE(s / draws, 1.03);
    }
}

TEST(Dropout, EvalModeIsIdentity) {
    DropoutLayer d(5, 0.5);
    d.set_mode(Mode::eval);
    Rng rng(1);
    const Matrix x = oracle::random_matrix(3, 5, 1);
    EXPECT_EQ(d.forward(x, rng), x);
    EXPECT_EQ(d.backward(x), x);
}

TEST(Dropout, FrozenMaskIsReused) {
    DropoutLayer d(6, 0.5);
    Rng rng(3);
    const Matrix x(4, 6, 1.0);
    d.forward(x, rng);
    const Matrix first = d.mask();
    d.set_frozen(true);
    d.forward(x, rng);
    EXPECT_EQ(d.mask(), first);
    d.set_frozen(false);
    bool changed = false;
    for (int i = 0; i < 5 && !changed; ++i) {
        d.forward(x, rng);
        changed = !(d.mask() == first);
    }
    EXPECT_TRUE(changed);
}
