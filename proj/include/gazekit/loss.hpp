#pragma once

#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/output.hpp"

namespace gazekit {

/// Quantile levels the pinball loss is averaged over. The default is
/// {0.1, 0.9}; every level must lie strictly inside (0, 1).
struct QuantileSet {
    explicit QuantileSet(std::vector<double> levels);
    static QuantileSet defaults();  // {0.1, 0.9}

    std::vector<double> taus;
};

struct LossBreakdown {
    double total = 0.0;
    double per_target[3] = {0.0, 0.0, 0.0};  // s_theta, c_theta, s_phi
    double regularizer = 0.0;                // 0 when disabled
};

/// Quantile loss with an uncertainty offset:
///   y_tau = y_g - (y_p - sigma) for tau <= 0.5, y_g - (y_p + sigma) otherwise
///   L = max(tau*y_tau, -(1-tau)*y_tau)
/// Throws std::invalid_argument for sigma < 0 or tau outside (0,1).
double pinball(double y_p, double sigma, double y_g, double tau);

/// Pinball loss averaged over the quantile set for each of the three encoded
/// targets, then averaged over targets. The single sigma enters every term.
LossBreakdown gaze_loss(const ModelOutput& pred, const EncodedGaze& target, const QuantileSet& quantiles);

/// reg_weight * pinball total + (1 - reg_weight) * (1 - (s^2 + c^2))^2.
/// reg_weight must lie in [0, 1]; the default used in practice is 0.9.
LossBreakdown regularized_gaze_loss(const ModelOutput& pred, const EncodedGaze& target,
                                    const QuantileSet& quantiles, double reg_weight);

/// Gradient of the (optionally regularized) loss with respect to the four
/// head outputs. Subgradient at the kink y_tau = 0 takes the tau branch.
struct GazeLossGrad {
    double d_s_theta = 0.0;
    double d_c_theta = 0.0;
    double d_s_phi = 0.0;
    double d_sigma = 0.0;
};

GazeLossGrad gaze_loss_grad(const ModelOutput& pred, const EncodedGaze& target, const QuantileSet& quantiles);

GazeLossGrad regularized_gaze_loss_grad(const ModelOutput& pred, const EncodedGaze& target,
                                        const QuantileSet& quantiles, double reg_weight);

/// Raw-head counterpart: same pinball mechanics applied to the two direct
/// angle targets, averaged over quantiles then over the two targets.
struct RawLoss {
    double total = 0.0;
    double per_target[2] = {0.0, 0.0};  // theta, phi
};
struct RawLossGrad {
    double d_theta = 0.0;
    double d_phi = 0.0;
    double d_sigma = 0.0;
};

RawLoss raw_gaze_loss(const ModelOutput& pred, const GazeAngles& target, const QuantileSet& quantiles);
RawLossGrad raw_gaze_loss_grad(const ModelOutput& pred, const GazeAngles& target, const QuantileSet& quantiles);

}  // namespace gazekit
