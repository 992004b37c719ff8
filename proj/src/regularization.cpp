#include "ans/regularization.hpp"

#include <cmath>
#include <string>

#include "ans/error.hpp"

namespace ans {

void GammaSchedule::validate() const {
    if (!(std::isfinite(alpha) && alpha >= 0.0)) {
        throw DomainError("GammaSchedule: alpha must be finite and >= 0, got " + std::to_string(alpha));
    }
    if (!(std::isfinite(beta) && beta >= 0.0)) {
        throw DomainError("GammaSchedule: beta must be finite and >= 0, got " + std::to_string(beta));
    }
}

double gamma(const GammaSchedule& schedule, double accuracy) {
    schedule.validate();
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
        throw DomainError("gamma: batch accuracy must lie in [0, 1], got " + std::to_string(accuracy));
    }
    // std::pow already gives pow(0, 0) == 1; spelled out so the convention is visible.
    if (schedule.beta == 0.0) return schedule.alpha;
    return schedule.alpha * std::pow(accuracy, schedule.beta);
}

double RegReport::mean_gate() const noexcept {
    if (per_layer.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : per_layer) s += p.mean_gate;
    return s / static_cast<double>(per_layer.size());
}

namespace {

double penalty_scale(std::size_t k, std::size_t batch, double gamma, RegNormalization norm) {
    const double per_unit = gamma / static_cast<double>(k);
    return norm == RegNormalization::batch_mean ? per_unit / static_cast<double>(batch) : per_unit;
}

LayerPenalty layer_penalty(std::size_t index, const Matrix& g, double gamma, RegNormalization norm) {
    if (g.empty()) throw ShapeError("reg_loss: empty gate matrix for layer " + std::to_string(index));
    const double total = g.sum();
    LayerPenalty p;
    p.layer = index;
    p.mean_gate = total / static_cast<double>(g.size());
    p.l_reg = penalty_scale(g.cols(), g.rows(), gamma, norm) * total;
    return p;
}

void require_gamma(double gamma) {
    if (!(std::isfinite(gamma) && gamma >= 0.0)) {
        throw DomainError("regularization: gamma must be finite and >= 0, got " + std::to_string(gamma));
    }
}

}  // namespace

RegReport reg_loss(std::span<const Matrix* const> gates, double gamma, RegNormalization norm) {
    require_gamma(gamma);
    RegReport report;
    report.gamma = gamma;
    for (std::size_t i = 0; i < gates.size(); ++i) {
        report.per_layer.push_back(layer_penalty(i, *gates[i], gamma, norm));
        report.l_reg_total += report.per_layer.back().l_reg;
    }
    return report;
}

RegReport reg_loss(std::span<const Matrix> gates, double gamma, RegNormalization norm) {
    std::vector<const Matrix*> ptrs;
    ptrs.reserve(gates.size());
    for (const Matrix& g : gates) ptrs.push_back(&g);
    return reg_loss(std::span<const Matrix* const>(ptrs), gamma, norm);
}

Matrix reg_grad_z(const AnsGateLayer& layer, double gamma, RegNormalization norm) {
    require_gamma(gamma);
    const Matrix& g = layer.gates();
    Matrix out(g.rows(), g.cols());
    if (gamma == 0.0) return out;
    const double scale = penalty_scale(g.cols(), g.rows(), gamma, norm);
    auto gv = g.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = scale * gv[i] * (1.0 - gv[i]);
    return out;
}

}  // namespace ans
