#include "ans/ops.hpp"

#include <cmath>
#include <string>

#include "ans/error.hpp"

namespace ans {

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
    if (!ok) {
        throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                         b.shape_string());
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul", a, b);
    Matrix out(a.rows(), b.cols());
    // i-k-j order: contiguous inner loop, fixed accumulation order.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row_span(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            auto b_row = b.row_span(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    require_finite(out, "matmul");
    return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_transposed", a, b);
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto a_row = a.row_span(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto b_row = b.row_span(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a_row[k] * b_row[k];
            out(i, j) = s;
        }
    }
    require_finite(out, "matmul_transposed");
    return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "transposed_matmul", a, b);
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto a_row = a.row_span(k);
        auto b_row = b.row_span(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a_row[i];
            auto out_row = out.row_span(i);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
        }
    }
    require_finite(out, "transposed_matmul");
    return out;
}

Matrix add_row_bias(const Matrix& y, const Matrix& bias) {
    require(bias.rows() == 1 && bias.cols() == y.cols(), "add_row_bias", y, bias);
    Matrix out = y;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row_span(r);
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] += bias(0, c);
    }
    require_finite(out, "add_row_bias");
    return out;
}

Matrix column_sums(const Matrix& m) {
    Matrix out(1, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row_span(r);
        for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += row[c];
    }
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out(a.rows(), a.cols());
    auto ad = a.data();
    auto bd = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
    require_finite(out, "hadamard");
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    require_finite(out, "relu");
    return out;
}

Matrix relu_backward(const Matrix& x, const Matrix& upstream) {
    require_same_shape(x, upstream, "relu_backward");
    Matrix out(x.rows(), x.cols());
    auto xd = x.data();
    auto ud = upstream.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] > 0.0 ? ud[i] : 0.0;
    require_finite(out, "relu_backward");
    return out;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data()) v = sigmoid(v);
    require_finite(out, "sigmoid");
    return out;
}

std::vector<Label> argmax_rows(const Matrix& m) {
    std::vector<Label> out(m.rows(), 0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row_span(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        out[r] = best;
    }
    return out;
}

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto in = logits.row_span(r);
        auto row = out.row_span(r);
        double mx = in[0];
        for (double v : in) mx = v > mx ? v : mx;
        double denom = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            row[c] = std::exp(in[c] - mx);
            denom += row[c];
        }
        for (double& v : row) v /= denom;
    }
    return out;
}

CrossEntropyResult softmax_cross_entropy(const Matrix& logits, std::span<const Label> labels) {
    if (logits.rows() == 0) throw DomainError("softmax_cross_entropy: empty batch");
    if (logits.cols() == 0) throw ShapeError("softmax_cross_entropy: logits have no classes");
    if (labels.size() != logits.rows()) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows()) + " rows");
    }
    require_finite(logits, "softmax_cross_entropy");

    const std::size_t batch = logits.rows();
    const double inv_batch = 1.0 / static_cast<double>(batch);
    CrossEntropyResult res;
    res.grad_logits = Matrix(batch, logits.cols());
    res.predictions = argmax_rows(logits);

    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        const Label y = labels[r];
        if (y >= logits.cols()) {
            throw DomainError("softmax_cross_entropy: label " + std::to_string(y) +
                              " out of range for " + std::to_string(logits.cols()) + " classes");
        }
        auto in = logits.row_span(r);
        auto grad = res.grad_logits.row_span(r);
        const std::size_t top = res.predictions[r];
        const double mx = in[top];
        // The max term contributes exactly 1; summing the rest separately
        // lets log1p keep full precision for confident rows.
        double rest = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            grad[c] = std::exp(in[c] - mx);
            if (c != top) rest += grad[c];
        }
        const double denom = 1.0 + rest;
        // -log p_y = log(sum exp(l - mx)) - (l_y - mx)
        total += std::log1p(rest) - (in[y] - mx);
        for (std::size_t c = 0; c < in.size(); ++c) {
            const double p = grad[c] / denom;
            grad[c] = (p - (c == y ? 1.0 : 0.0)) * inv_batch;
        }
    }
    res.loss = total * inv_batch;
    if (!std::isfinite(res.loss)) throw NumericError("softmax_cross_entropy: non-finite loss");
    return res;
}

}  // namespace ans
