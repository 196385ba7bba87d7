#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gazekit/loss.hpp"

#include "test_util.hpp"

using namespace gazekit;
using doctest::Approx;

namespace {

ModelOutput encoded_pred(double s, double c, double s_phi, double sigma) {
    ModelOutput out;
    out.mode = HeadMode::encoded;
    out.s_theta = s;
    out.c_theta = c;
    out.s_phi = s_phi;
    out.sigma = sigma;
    return out;
}

// Central finite differences over the four head outputs.
GazeLossGrad fd_grad(const ModelOutput& pred, const EncodedGaze& target, const QuantileSet& q,
                     double reg_weight, bool regularized, double h = 1e-6) {
    auto eval = [&](const ModelOutput& p) {
        return regularized ? regularized_gaze_loss(p, target, q, reg_weight).total
                           : gaze_loss(p, target, q).total;
    };
    GazeLossGrad g;
    double* outs[4] = {&g.d_s_theta, &g.d_c_theta, &g.d_s_phi, &g.d_sigma};
    for (int k = 0; k < 4; ++k) {
        ModelOutput lo = pred, hi = pred;
        switch (k) {
            case 0:
                lo.s_theta -= h;
                hi.s_theta += h;
                break;
            case 1:
                lo.c_theta -= h;
                hi.c_theta += h;
                break;
            case 2:
                lo.s_phi -= h;
                hi.s_phi += h;
                break;
            case 3:
                lo.sigma -= h;
                hi.sigma += h;
                break;
        }
        *outs[k] = (eval(hi) - eval(lo)) / (2 * h);
    }
    return g;
}

// The pinball kink sits at y_tau = 0; finite differences are only trusted
// outside a band around it.
bool near_kink(const ModelOutput& pred, const EncodedGaze& target, const QuantileSet& q, double band) {
    const double preds[3] = {pred.s_theta, pred.c_theta, pred.s_phi};
    const double goals[3] = {target.s_theta, target.c_theta, target.s_phi};
    for (int t = 0; t < 3; ++t) {
        for (double tau : q.taus) {
            const double y_tau =
                tau <= 0.5 ? goals[t] - (preds[t] - pred.sigma) : goals[t] - (preds[t] + pred.sigma);
            if (std::abs(y_tau) < band) {
                return true;
            }
        }
    }
    return false;
}

}  // namespace

TEST_CASE("pinball hand values from the quantile definition") {
    CHECK(pinball(0.8, 0.1, 1.0, 0.1) == Approx(0.03).epsilon(1e-12));
    CHECK(pinball(0.8, 0.1, 1.0, 0.9) == Approx(0.09).epsilon(1e-12));
    CHECK(pinball(0.42, 0.0, 0.42, 0.1) == 0.0);
    CHECK_THROWS_AS(pinball(0.0, -0.1, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(pinball(0.0, 0.1, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pinball(0.0, 0.1, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("pinball is non-negative, zero only at y_tau = 0, convex in y_p") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> val(-2, 2), sig(0, 1), tau_d(0.05, 0.95), lam(0, 1);
    for (int i = 0; i < 2000; ++i) {
        const double y_g = val(rng), sigma = sig(rng), tau = tau_d(rng);
        const double a = val(rng), b = val(rng), l = lam(rng);
        const double fa = pinball(a, sigma, y_g, tau);
        CHECK(fa >= 0.0);
        if (fa == 0.0) {
            const double y_tau = tau <= 0.5 ? y_g - (a - sigma) : y_g - (a + sigma);
            CHECK(std::abs(y_tau) < 1e-15);
        }
        const double fb = pinball(b, sigma, y_g, tau);
        const double fmid = pinball(l * a + (1 - l) * b, sigma, y_g, tau);
        CHECK(fmid <= l * fa + (1 - l) * fb + 1e-12);
    }
}

TEST_CASE("gaze loss averages quantiles within targets and targets overall") {
    const QuantileSet q = QuantileSet::defaults();

    SUBCASE("perfect prediction with zero sigma") {
        const EncodedGaze target(0.3, 0.9539392014169456, 0.1);
        ModelOutput pred = encoded_pred(target.s_theta, target.c_theta, target.s_phi, 0.0);
        const LossBreakdown lb = gaze_loss(pred, target, q);
        CHECK(lb.total == 0.0);
    }

    SUBCASE("one off target plus the sigma-induced floor on exact targets") {
        // s_theta: tau 0.1 gives max(0.03, -0.27) = 0.03, tau 0.9 gives
        // max(0.09, -0.01) = 0.09, so the component averages 0.06. An exact
        // target with sigma 0.1 has residuals +0.1/-0.1, so both quantiles
        // contribute max(0.01, -0.09) = 0.01.
        const EncodedGaze target(1.0, 0.5, -0.2);
        ModelOutput pred = encoded_pred(0.8, 0.5, -0.2, 0.1);
        const LossBreakdown lb = gaze_loss(pred, target, q);
        CHECK(lb.per_target[0] == Approx(0.06).epsilon(1e-12));
        CHECK(lb.per_target[1] == Approx(0.01).epsilon(1e-12));
        CHECK(lb.per_target[2] == Approx(0.01).epsilon(1e-12));
        CHECK(lb.total == Approx(0.08 / 3.0).epsilon(1e-12));
        CHECK(lb.total == Approx((lb.per_target[0] + lb.per_target[1] + lb.per_target[2]) / 3.0));
        CHECK(lb.regularizer == 0.0);
    }

    SUBCASE("both quantiles of a negative residual") {
        const EncodedGaze target(-0.2, 1.0, 0.0);
        ModelOutput pred = encoded_pred(0.0, 0.0, 0.0, 0.05);
        const LossBreakdown lb = gaze_loss(pred, target, q);
        CHECK(lb.per_target[0] == Approx(0.5 * (0.135 + 0.025)).epsilon(1e-12));
        CHECK(lb.per_target[0] == Approx(0.08).epsilon(1e-12));
    }

    SUBCASE("invariant to quantile and target ordering") {
        const QuantileSet flipped({0.9, 0.1});
        std::mt19937 rng(43);
        std::uniform_real_distribution<double> val(-1, 1), sig(0, 1);
        for (int i = 0; i < 500; ++i) {
            const EncodedGaze target(val(rng), val(rng), val(rng));
            ModelOutput pred = encoded_pred(val(rng), val(rng), val(rng), sig(rng));
            CHECK(gaze_loss(pred, target, q).total ==
                  Approx(gaze_loss(pred, target, flipped).total).epsilon(1e-14));

            // Swapping the s/c slots of both prediction and target permutes
            // the per-target terms without changing the mean.
            ModelOutput swapped = encoded_pred(pred.c_theta, pred.s_theta, pred.s_phi, pred.sigma);
            const EncodedGaze starget(target.c_theta, target.s_theta, target.s_phi);
            CHECK(gaze_loss(pred, target, q).total ==
                  Approx(gaze_loss(swapped, starget, q).total).epsilon(1e-14));
        }
    }
}

TEST_CASE("regularized loss blends in the unit-circle penalty") {
    const QuantileSet q = QuantileSet::defaults();

    SUBCASE("on-circle predictions pay no penalty") {
        const EncodedGaze target(0.0, 1.0, 0.2);
        ModelOutput pred = encoded_pred(0.6, 0.8, 0.1, 0.3);
        const LossBreakdown base = gaze_loss(pred, target, q);
        const LossBreakdown reg = regularized_gaze_loss(pred, target, q, 0.9);
        CHECK(reg.regularizer == approx_abs(0.0, 1e-15));
        CHECK(reg.total == Approx(0.9 * base.total).epsilon(1e-12));
    }

    SUBCASE("maximal circle violation adds (1-w) * 1") {
        const EncodedGaze target(0.0, 1.0, 0.0);
        ModelOutput pred = encoded_pred(0.0, 0.0, 0.0, 0.0);
        const LossBreakdown base = gaze_loss(pred, target, q);
        const LossBreakdown reg = regularized_gaze_loss(pred, target, q, 0.9);
        CHECK(reg.regularizer == Approx(1.0));
        CHECK(reg.total == Approx(0.9 * base.total + 0.1).epsilon(1e-12));
    }

    SUBCASE("weight 1 degenerates to the plain loss") {
        std::mt19937 rng(47);
        std::uniform_real_distribution<double> val(-1, 1), sig(0, 1);
        for (int i = 0; i < 200; ++i) {
            const EncodedGaze target(val(rng), val(rng), val(rng));
            ModelOutput pred = encoded_pred(val(rng), val(rng), val(rng), sig(rng));
            CHECK(regularized_gaze_loss(pred, target, q, 1.0).total ==
                  Approx(gaze_loss(pred, target, q).total).epsilon(1e-15));
        }
    }

    SUBCASE("rejects weights outside [0,1]") {
        const EncodedGaze target(0, 1, 0);
        ModelOutput pred = encoded_pred(0, 1, 0, 0.1);
        CHECK_THROWS_AS(regularized_gaze_loss(pred, target, q, -0.1), std::invalid_argument);
        CHECK_THROWS_AS(regularized_gaze_loss(pred, target, q, 1.1), std::invalid_argument);
    }
}

TEST_CASE("analytic gradient matches central finite differences off the kinks") {
    const QuantileSet q = QuantileSet::defaults();
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> val(-1, 1), sig(0.05, 0.8);

    int checked = 0;
    while (checked < 100) {
        const EncodedGaze target(val(rng), val(rng), val(rng));
        ModelOutput pred = encoded_pred(val(rng), val(rng), val(rng), sig(rng));
        if (near_kink(pred, target, q, 1e-4)) {
            continue;
        }
        ++checked;
        // The 1e-9 floor absorbs finite-difference rounding noise (~1e-11)
        // on coordinates whose true gradient is zero.
        const GazeLossGrad a = gaze_loss_grad(pred, target, q);
        const GazeLossGrad f = fd_grad(pred, target, q, 0.9, false);
        for (auto [av, fv] : {std::pair{a.d_s_theta, f.d_s_theta},
                              std::pair{a.d_c_theta, f.d_c_theta},
                              std::pair{a.d_s_phi, f.d_s_phi},
                              std::pair{a.d_sigma, f.d_sigma}}) {
            CHECK(std::abs(av - fv) <= 1e-5 * std::max(std::abs(av), std::abs(fv)) + 1e-9);
        }

        const GazeLossGrad ar = regularized_gaze_loss_grad(pred, target, q, 0.9);
        const GazeLossGrad fr = fd_grad(pred, target, q, 0.9, true);
        for (auto [av, fv] : {std::pair{ar.d_s_theta, fr.d_s_theta},
                              std::pair{ar.d_c_theta, fr.d_c_theta},
                              std::pair{ar.d_s_phi, fr.d_s_phi},
                              std::pair{ar.d_sigma, fr.d_sigma}}) {
            CHECK(std::abs(av - fv) <= 1e-4 * std::max(std::abs(av), std::abs(fv)) + 1e-9);
        }
    }

    SUBCASE("perfect prediction with positive sigma, via the oracle") {
        const EncodedGaze target(0.2, 0.4, -0.3);
        ModelOutput pred = encoded_pred(0.2, 0.4, -0.3, 0.1);
        const GazeLossGrad a = gaze_loss_grad(pred, target, q);
        const GazeLossGrad f = fd_grad(pred, target, q, 0.9, false);
        CHECK(a.d_sigma == Approx(f.d_sigma).epsilon(1e-9));
        CHECK(a.d_s_theta == Approx(f.d_s_theta).epsilon(1e-9));
    }

    SUBCASE("regularizer contributes nothing on the unit circle") {
        const EncodedGaze target(0.9, 0.1, 0.0);
        ModelOutput pred = encoded_pred(0.6, 0.8, 0.2, 0.3);
        const GazeLossGrad plain = gaze_loss_grad(pred, target, q);
        const GazeLossGrad reg = regularized_gaze_loss_grad(pred, target, q, 0.9);
        CHECK(reg.d_s_theta == Approx(0.9 * plain.d_s_theta).epsilon(1e-12));
        CHECK(reg.d_c_theta == Approx(0.9 * plain.d_c_theta).epsilon(1e-12));
        CHECK(reg.d_sigma == Approx(0.9 * plain.d_sigma).epsilon(1e-12));
    }
}

TEST_CASE("raw-head loss applies the same pinball mechanics to two targets") {
    const QuantileSet q = QuantileSet::defaults();
    ModelOutput pred;
    pred.mode = HeadMode::raw;
    pred.theta = 0.8;
    pred.phi = 0.0;
    pred.sigma = 0.1;
    const GazeAngles target(1.0, 0.0);
    const RawLoss rl = raw_gaze_loss(pred, target, q);
    CHECK(rl.per_target[0] == Approx(0.06).epsilon(1e-12));  // same arithmetic as the encoded case
    CHECK(rl.per_target[1] == Approx(0.01).epsilon(1e-12));
    CHECK(rl.total == Approx(0.5 * (0.06 + 0.01)).epsilon(1e-12));

    // finite-difference check on theta
    const double h = 1e-6;
    ModelOutput lo = pred, hi = pred;
    lo.theta -= h;
    hi.theta += h;
    const double fd =
        (raw_gaze_loss(hi, target, q).total - raw_gaze_loss(lo, target, q).total) / (2 * h);
    CHECK(raw_gaze_loss_grad(pred, target, q).d_theta == Approx(fd).epsilon(1e-9));
}
