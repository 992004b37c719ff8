#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ans/network.hpp"
#include "ans/ops.hpp"

namespace ans {

struct BlockCheck {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;  ///< at worst_index
    double numeric = 0.0;   ///< at worst_index
};

struct GradcheckReport {
    std::vector<BlockCheck> blocks;
    double tolerance = 1e-4;

    bool passed() const noexcept;
    std::vector<std::string> failing_blocks() const;
};

/// Relative error |a - n| / max(|a|, |n|, floor). Central differences with
/// h = 1e-6 on an O(1) objective carry about eps * |J| / h ~ 1e-10 of rounding
/// noise, so entries much smaller than 1e-5 would measure that noise rather
/// than the gradient; the floor caps their contribution.
double relative_error(double analytic, double numeric, double floor = 1e-5) noexcept;

/// Compares the analytic gradient of J = L_grad + L_reg at fixed gamma against
/// central differences with step `h`, for every parameter block and for the
/// input batch (block "input"). Dropout masks are frozen for the duration.
/// Parameters are restored exactly afterwards.
GradcheckReport gradcheck(Network& net, const Matrix& x, std::span<const Label> y, double gamma,
                          const GateSettings& settings, double h = 1e-6, double tolerance = 1e-4);

}  // namespace ans
