#include "gazekit/loss.hpp"

#include <algorithm>
#include <stdexcept>

namespace gazekit {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("pinball: tau must lie in (0, 1)");
    }
}

double residual(double y_p, double sigma, double y_g, double tau) {
    return tau <= 0.5 ? y_g - (y_p - sigma) : y_g - (y_p + sigma);
}

// d(pinball)/d(y_tau); the kink at y_tau = 0 takes the tau branch.
double pinball_slope(double y_tau, double tau) {
    return y_tau >= 0.0 ? tau : -(1.0 - tau);
}

// Pinball averaged over quantiles for one target, plus its gradient
// with respect to (y_p, sigma).
struct TargetLoss {
    double loss = 0.0;
    double d_pred = 0.0;
    double d_sigma = 0.0;
};

TargetLoss target_pinball(double y_p, double sigma, double y_g, const QuantileSet& q) {
    TargetLoss out;
    for (double tau : q.taus) {
        const double y_tau = residual(y_p, sigma, y_g, tau);
        out.loss += std::max(tau * y_tau, -(1.0 - tau) * y_tau);
        const double slope = pinball_slope(y_tau, tau);
        out.d_pred += -slope;
        out.d_sigma += tau <= 0.5 ? slope : -slope;
    }
    const double inv = 1.0 / static_cast<double>(q.taus.size());
    out.loss *= inv;
    out.d_pred *= inv;
    out.d_sigma *= inv;
    return out;
}

void check_sigma(double sigma) {
    if (sigma < 0.0) {
        throw std::invalid_argument("pinball: sigma must be non-negative");
    }
}

void check_reg_weight(double w) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw std::invalid_argument("regularized_gaze_loss: reg_weight outside [0, 1]");
    }
}

}  // namespace

QuantileSet::QuantileSet(std::vector<double> levels) : taus(std::move(levels)) {
    if (taus.empty()) {
        throw std::invalid_argument("QuantileSet: empty");
    }
    for (double tau : taus) {
        check_tau(tau);
    }
}

QuantileSet QuantileSet::defaults() { return QuantileSet({0.1, 0.9}); }

double pinball(double y_p, double sigma, double y_g, double tau) {
    check_sigma(sigma);
    check_tau(tau);
    const double y_tau = residual(y_p, sigma, y_g, tau);
    return std::max(tau * y_tau, -(1.0 - tau) * y_tau);
}

LossBreakdown gaze_loss(const ModelOutput& pred, const EncodedGaze& target, const QuantileSet& quantiles) {
    check_sigma(pred.sigma);
    LossBreakdown out;
    const double preds[3] = {pred.s_theta, pred.c_theta, pred.s_phi};
    const double goals[3] = {target.s_theta, target.c_theta, target.s_phi};
    for (int t = 0; t < 3; ++t) {
        out.per_target[t] = target_pinball(preds[t], pred.sigma, goals[t], quantiles).loss;
        out.total += out.per_target[t];
    }
    out.total /= 3.0;
    return out;
}

LossBreakdown regularized_gaze_loss(const ModelOutput& pred, const EncodedGaze& target,
                                    const QuantileSet& quantiles, double reg_weight) {
    check_reg_weight(reg_weight);
    LossBreakdown out = gaze_loss(pred, target, quantiles);
    const double circle = pred.s_theta * pred.s_theta + pred.c_theta * pred.c_theta;
    const double mse = (1.0 - circle) * (1.0 - circle);
    out.regularizer = mse;
    out.total = reg_weight * out.total + (1.0 - reg_weight) * mse;
    return out;
}

GazeLossGrad gaze_loss_grad(const ModelOutput& pred, const EncodedGaze& target, const QuantileSet& quantiles) {
    check_sigma(pred.sigma);
    const double preds[3] = {pred.s_theta, pred.c_theta, pred.s_phi};
    const double goals[3] = {target.s_theta, target.c_theta, target.s_phi};
    double d_pred[3];
    GazeLossGrad g;
    for (int t = 0; t < 3; ++t) {
        const TargetLoss tl = target_pinball(preds[t], pred.sigma, goals[t], quantiles);
        d_pred[t] = tl.d_pred / 3.0;
        g.d_sigma += tl.d_sigma / 3.0;
    }
    g.d_s_theta = d_pred[0];
    g.d_c_theta = d_pred[1];
    g.d_s_phi = d_pred[2];
    return g;
}

GazeLossGrad regularized_gaze_loss_grad(const ModelOutput& pred, const EncodedGaze& target,
                                        const QuantileSet& quantiles, double reg_weight) {
    check_reg_weight(reg_weight);
    GazeLossGrad g = gaze_loss_grad(pred, target, quantiles);
    g.d_s_theta *= reg_weight;
    g.d_c_theta *= reg_weight;
    g.d_s_phi *= reg_weight;
    g.d_sigma *= reg_weight;
    const double circle = pred.s_theta * pred.s_theta + pred.c_theta * pred.c_theta;
    const double d_mse = -4.0 * (1.0 - circle) * (1.0 - reg_weight);
    g.d_s_theta += d_mse * pred.s_theta;
    g.d_c_theta += d_mse * pred.c_theta;
    return g;
}

RawLoss raw_gaze_loss(const ModelOutput& pred, const GazeAngles& target, const QuantileSet& quantiles) {
    check_sigma(pred.sigma);
    RawLoss out;
    out.per_target[0] = target_pinball(pred.theta, pred.sigma, target.yaw, quantiles).loss;
    out.per_target[1] = target_pinball(pred.phi, pred.sigma, target.pitch, quantiles).loss;
    out.total = 0.5 * (out.per_target[0] + out.per_target[1]);
    return out;
}

RawLossGrad raw_gaze_loss_grad(const ModelOutput& pred, const GazeAngles& target, const QuantileSet& quantiles) {
    check_sigma(pred.sigma);
    const TargetLoss t0 = target_pinball(pred.theta, pred.sigma, target.yaw, quantiles);
    const TargetLoss t1 = target_pinball(pred.phi, pred.sigma, target.pitch, quantiles);
    RawLossGrad g;
    g.d_theta = 0.5 * t0.d_pred;
    g.d_phi = 0.5 * t1.d_pred;
    g.d_sigma = 0.5 * (t0.d_sigma + t1.d_sigma);
    return g;
}

}  // namespace gazekit
