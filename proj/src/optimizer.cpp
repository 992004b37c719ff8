#include "ans/optimizer.hpp"

#include <cmath>

#include "ans/error.hpp"

namespace ans {

namespace {

void validate(const SgdOptions& o) {
    if (!(std::isfinite(o.lr) && o.lr > 0.0))
        throw DomainError("SGD: lr must be positive, got " + std::to_string(o.lr));
    if (!(o.momentum >= 0.0 && o.momentum < 1.0))
        throw DomainError("SGD: momentum must lie in [0, 1), got " + std::to_string(o.momentum));
    if (!(std::isfinite(o.weight_decay) && o.weight_decay >= 0.0))
        throw DomainError("SGD: weight_decay must be >= 0, got " + std::to_string(o.weight_decay));
}

}  // namespace

SgdState::SgdState(SgdOptions options) : options_(options) { validate(options_); }

void SgdState::set_lr(double lr) {
    SgdOptions next = options_;
    next.lr = lr;
    validate(next);
    options_ = next;
}

void sgd_step(SgdState& state, std::span<const ParamRef> params) {
    if (state.velocities_.empty()) {
        state.velocities_.reserve(params.size());
        for (const ParamRef& p : params) state.velocities_.emplace_back(p.value->rows(), p.value->cols());
    }
    if (state.velocities_.size() != params.size()) {
        throw ShapeError("sgd_step: optimizer tracks " + std::to_string(state.velocities_.size()) +
                         " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamRef& p = params[i];
        require_same_shape(*p.value, *p.grad, ("sgd_step " + p.name).c_str());
        require_same_shape(*p.value, state.velocities_[i], ("sgd_step velocity " + p.name).c_str());
    }

    const double lr = state.options_.lr;
    const double mu = state.options_.momentum;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamRef& p = params[i];
        const double wd = p.decay ? state.options_.weight_decay : 0.0;
        auto w = p.value->data();
        auto g = p.grad->data();
        auto v = state.velocities_[i].data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g[j] + wd * w[j];
            v[j] = mu * v[j] + gj;
            w[j] -= lr * (gj + mu * v[j]);
        }
        require_finite(*p.value, ("sgd_step " + p.name).c_str());
    }
}

void LrSchedule::validate() const {
    if (!(std::isfinite(initial_lr) && initial_lr > 0.0))
        throw DomainError("LrSchedule: initial lr must be positive");
    if (!(factor > 0.0 && factor < 1.0))
        throw DomainError("LrSchedule: factor must lie in (0, 1), got " + std::to_string(factor));
    for (std::size_t i = 1; i < milestones.size(); ++i) {
        if (milestones[i] <= milestones[i - 1])
            throw DomainError("LrSchedule: milestones must be strictly increasing");
    }
}

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
    double lr = schedule.initial_lr;
    for (std::size_t m : schedule.milestones)
        if (m <= epoch) lr *= schedule.factor;
    return lr;
}

}  // namespace ans
