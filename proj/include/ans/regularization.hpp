#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ans/layers.hpp"
#include "ans/matrix.hpp"

namespace ans {

/// Maps batch accuracy M in [0, 1] to penalty strength gamma = alpha * M^beta.
/// alpha = 0 switches the penalty off while keeping the gates.
struct GammaSchedule {
    double alpha = 1.0;
    double beta = 1.0;

    /// Throws DomainError on negative or non-finite alpha/beta.
    void validate() const;
};

/// alpha * M^beta, with 0^0 taken as 1. Throws DomainError when M is outside [0, 1].
double gamma(const GammaSchedule& schedule, double accuracy);

/// How the per-layer L1 gate penalty is scaled over a batch.
enum class RegNormalization {
    batch_mean,  ///< gamma / (k * batch) * sum(g): consistent with the batch-mean cross-entropy
    sum,         ///< gamma / k * sum(g): per-sample penalties summed over the batch
};

struct LayerPenalty {
    std::size_t layer = 0;   ///< position among the gated layers
    double mean_gate = 0.0;  ///< sum(g) / (k * batch)
    double l_reg = 0.0;
};

struct RegReport {
    double gamma = 0.0;
    double l_reg_total = 0.0;
    std::vector<LayerPenalty> per_layer;

    /// Mean of the per-layer mean gate activations; 0 when there are no gates.
    double mean_gate() const noexcept;
};

/// Normalized L1 penalty on the cached gate values of each gated layer, summed
/// over layers. The sigmoid keeps every g positive, so |g| = g. An empty list
/// yields a zero report.
RegReport reg_loss(std::span<const Matrix* const> gates, double gamma,
                   RegNormalization norm = RegNormalization::batch_mean);
RegReport reg_loss(std::span<const Matrix> gates, double gamma,
                   RegNormalization norm = RegNormalization::batch_mean);

/// dL_reg/dz for one layer: scale * g * (1 - g), scale = gamma / (k * batch)
/// (or gamma / k in sum mode). Throws StateError when the layer has no cache.
Matrix reg_grad_z(const AnsGateLayer& layer, double gamma,
                  RegNormalization norm = RegNormalization::batch_mean);

}  // namespace ans
