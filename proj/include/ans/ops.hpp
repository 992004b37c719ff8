#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ans/matrix.hpp"

namespace ans {

using Label = std::size_t;

/// a * b. Throws ShapeError naming both shapes when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * b^T without materializing the transpose. Used for the batched x * W^T.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// a^T * b without materializing the transpose. Used for weight gradients.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);

/// Adds the 1 x y.cols row `bias` to every row of `y`.
Matrix add_row_bias(const Matrix& y, const Matrix& bias);

/// 1 x cols row of column sums, accumulated top to bottom.
Matrix column_sums(const Matrix& m);

Matrix hadamard(const Matrix& a, const Matrix& b);

Matrix relu(const Matrix& x);

/// Passes `upstream` where x > 0; the subgradient at x == 0 is 0.
Matrix relu_backward(const Matrix& x, const Matrix& upstream);

/// Logistic function in the branch form that never exponentiates a positive
/// argument, so saturated inputs return exactly 0.0 or 1.0.
double sigmoid(double x) noexcept;
Matrix sigmoid(const Matrix& x);

struct CrossEntropyResult {
    double loss = 0.0;             ///< batch mean of -log softmax(logits)[label]
    Matrix grad_logits;            ///< (softmax - onehot) / batch
    std::vector<Label> predictions;  ///< row argmax, lowest index wins ties
};

/// Softmax cross-entropy with the max-shifted log-sum-exp.
CrossEntropyResult softmax_cross_entropy(const Matrix& logits, std::span<const Label> labels);

/// Row argmax with lowest-index tie-break.
std::vector<Label> argmax_rows(const Matrix& m);

/// Row-wise softmax (max shifted).
Matrix softmax(const Matrix& logits);

}  // namespace ans
