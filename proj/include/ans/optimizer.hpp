#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ans/matrix.hpp"

namespace ans {

/// A trainable tensor paired with its gradient accumulator.
struct ParamRef {
    std::string name;
    Matrix* value = nullptr;
    Matrix* grad = nullptr;
    bool decay = true;  ///< apply weight decay to this parameter
};

struct SgdOptions {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// SGD with Nesterov momentum and L2 weight decay:
///
///   g' = grad + wd * param
///   v  = mu * v + g'
///   param -= lr * (g' + mu * v)
///
/// Velocities are zero-initialized on the first step to mirror the parameter
/// list; later steps must present the same shapes in the same order.
class SgdState {
public:
    explicit SgdState(SgdOptions options);

    const SgdOptions& options() const noexcept { return options_; }
    double lr() const noexcept { return options_.lr; }
    void set_lr(double lr);

    const std::vector<Matrix>& velocities() const noexcept { return velocities_; }

    friend void sgd_step(SgdState& state, std::span<const ParamRef> params);

private:
    SgdOptions options_;
    std::vector<Matrix> velocities_;
};

void sgd_step(SgdState& state, std::span<const ParamRef> params);

/// Step decay: lr(epoch) = initial * factor^(number of milestones <= epoch).
struct LrSchedule {
    double initial_lr = 0.1;
    std::vector<std::size_t> milestones;
    double factor = 0.1;

    /// Throws DomainError unless initial_lr > 0, factor in (0, 1) and the
    /// milestones are strictly increasing.
    void validate() const;
};

double lr_at(const LrSchedule& schedule, std::size_t epoch);

}  // namespace ans
