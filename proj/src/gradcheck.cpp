#include "ans/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ans/training.hpp"

namespace ans {

bool GradcheckReport::passed() const noexcept {
    return std::all_of(blocks.begin(), blocks.end(),
                       [this](const BlockCheck& b) { return b.max_rel_error < tolerance; });
}

std::vector<std::string> GradcheckReport::failing_blocks() const {
    std::vector<std::string> out;
    for (const BlockCheck& b : blocks)
        if (!(b.max_rel_error < tolerance)) out.push_back(b.name);
    return out;
}

double relative_error(double analytic, double numeric, double floor) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

BlockCheck check_block(const std::string& name, std::span<double> values, std::span<const double> analytic,
                       const std::function<double()>& eval, double h) {
    BlockCheck b;
    b.name = name;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + h;
        const double up = eval();
        values[i] = saved - h;
        const double down = eval();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double err = relative_error(analytic[i], numeric);
        if (i == 0 || err > b.max_rel_error) {
            b.max_rel_error = err;
            b.worst_index = i;
            b.analytic = analytic[i];
            b.numeric = numeric;
        }
    }
    return b;
}

}  // namespace

GradcheckReport gradcheck(Network& net, const Matrix& x, std::span<const Label> y, double gamma,
                          const GateSettings& settings, double h, double tolerance) {
    GradcheckReport report;
    report.tolerance = tolerance;
    net.freeze_dropout(true);

    // The analytic pass also draws the dropout masks the perturbed passes reuse.
    const ObjectiveTerms terms = forward_backward(net, x, y, settings, gamma);
    auto params = net.parameters();
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (const ParamRef& p : params) analytic.push_back(*p.grad);

    Matrix input = x;
    auto eval = [&] { return objective(net, input, y, gamma, settings); };
    for (std::size_t i = 0; i < params.size(); ++i)
        report.blocks.push_back(check_block(params[i].name, params[i].value->data(), analytic[i].data(), eval, h));
    report.blocks.push_back(check_block("input", input.data(), terms.grad_input.data(), eval, h));

    net.freeze_dropout(false);
    return report;
}

}  // namespace ans
