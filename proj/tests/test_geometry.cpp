#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gazekit/geometry.hpp"

#include "test_util.hpp"

using namespace gazekit;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

double circular_dist(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2 * kPi);
    return std::min(d, 2 * kPi - d);
}
}  // namespace

TEST_CASE("encode_gaze on exact trigonometric points") {
    EncodedGaze zero = encode_gaze(GazeAngles(0, 0));
    CHECK(zero.s_theta == approx_abs(0, 1e-12));
    CHECK(zero.c_theta == Approx(1));
    CHECK(zero.s_phi == approx_abs(0, 1e-12));

    EncodedGaze back = encode_gaze(GazeAngles(kPi, 0));
    CHECK(back.s_theta == approx_abs(0, 1e-12));
    CHECK(back.c_theta == Approx(-1));

    EncodedGaze quarter = encode_gaze(GazeAngles(kPi / 2, kPi / 6));
    CHECK(quarter.s_theta == Approx(1));
    CHECK(quarter.c_theta == approx_abs(0, 1e-12));
    CHECK(quarter.s_phi == Approx(0.5));
}

TEST_CASE("gaze angle construction rejects out-of-range values") {
    CHECK_THROWS_AS(GazeAngles(3.2, 0), std::invalid_argument);
    CHECK_THROWS_AS(GazeAngles(-3.2, 0), std::invalid_argument);
    CHECK_THROWS_AS(GazeAngles(0, 1.6), std::invalid_argument);
    CHECK_THROWS_AS(GazeAngles(0, std::nan("")), std::invalid_argument);
    CHECK_NOTHROW(GazeAngles(kPi, -kPi / 2));
}

TEST_CASE("encoded components clamp to [-1, 1]") {
    EncodedGaze e(2.0, -3.0, 0.5);
    CHECK(e.s_theta == 1.0);
    CHECK(e.c_theta == -1.0);
    CHECK(e.s_phi == 0.5);
}

TEST_CASE("sign_nonneg is +1 on non-negative numbers") {
    CHECK(sign_nonneg(0.0) == 1.0);
    CHECK(sign_nonneg(-0.0) == 1.0);
    CHECK(sign_nonneg(3.5) == 1.0);
    CHECK(sign_nonneg(-1e-300) == -1.0);
}

TEST_CASE("theta_s decode handles all sign quadrants") {
    CHECK(decode_theta_s(EncodedGaze(0.5, 0.9, 0)) == Approx(0.5235987755982989).epsilon(1e-12));
    CHECK(decode_theta_s(EncodedGaze(0.5, -0.9, 0)) == Approx(2.6179938779914944).epsilon(1e-12));
    CHECK(decode_theta_s(EncodedGaze(-0.5, -0.9, 0)) == Approx(-2.6179938779914944).epsilon(1e-12));
}

TEST_CASE("theta_c decode signs by the sine") {
    CHECK(decode_theta_c(EncodedGaze(0.1, 0.5, 0)) == Approx(1.0471975511965976).epsilon(1e-12));
    CHECK(decode_theta_c(EncodedGaze(0.1, -1.0, 0)) == Approx(kPi));
    CHECK(decode_theta_c(EncodedGaze(-0.1, 0.5, 0)) == Approx(-1.0471975511965976).epsilon(1e-12));
}

TEST_CASE("sc decode averages the branches") {
    CHECK(decode_yaw_sc(encode_gaze(GazeAngles(0.3, 0))) == Approx(0.3).epsilon(1e-12));

    // Inconsistent pair: mean of asin(0.5) and acos(0.5) is exactly pi/4.
    const double expected = 0.5 * (std::asin(0.5) + std::acos(0.5));
    CHECK(expected == Approx(kPi / 4).epsilon(1e-15));
    CHECK(decode_yaw_sc(EncodedGaze(0.5, 0.5, 0)) == Approx(expected).epsilon(1e-15));

    const double near_pi = -kPi + 1e-9;
    CHECK(circular_dist(decode_yaw_sc(encode_gaze(GazeAngles(near_pi, 0))), near_pi) < 1e-6);
}

TEST_CASE("wsc decode weights the sine branch by |cos(mean)|") {
    WscDecode at_zero = decode_yaw_wsc(encode_gaze(GazeAngles(0, 0)));
    CHECK(at_zero.yaw == approx_abs(0, 1e-12));
    CHECK(at_zero.estimates.weight_w == Approx(1.0));

    WscDecode at_half = decode_yaw_wsc(encode_gaze(GazeAngles(kPi / 2, 0)));
    CHECK(at_half.yaw == Approx(kPi / 2).epsilon(1e-12));
    CHECK(at_half.estimates.weight_w == approx_abs(0.0, 1e-9));

    // Direct arithmetic oracle for the inconsistent pair (0.5, 0.5).
    const double ts = std::asin(0.5);
    const double tc = std::acos(0.5);
    const double w = std::abs(std::cos(0.5 * (ts + tc)));
    const double expected = w * ts + (1.0 - w) * tc;
    WscDecode got = decode_yaw_wsc(EncodedGaze(0.5, 0.5, 0));
    CHECK(got.yaw == Approx(expected).epsilon(1e-15));
    CHECK(got.yaw == approx_abs(0.6770, 1e-4));
    CHECK(got.estimates.weight_w == approx_abs(0.7071, 1e-4));
    CHECK(got.estimates.theta_s == approx_abs(0.5236, 1e-4));
    CHECK(got.estimates.theta_c == approx_abs(1.0472, 1e-4));
}

TEST_CASE("pitch decode is the arcsine") {
    CHECK(decode_pitch(EncodedGaze(0, 1, 0)) == 0.0);
    CHECK(decode_pitch(EncodedGaze(0, 1, 0.5)) == Approx(0.5235987755982989).epsilon(1e-12));
    CHECK(decode_pitch(EncodedGaze(0, 1, -1)) == Approx(-kPi / 2));
}

TEST_CASE("unit vector convention: frontal gaze looks along -z") {
    UnitVector3 front = to_unit_vector(GazeAngles(0, 0));
    CHECK(front.x == approx_abs(0, 1e-12));
    CHECK(front.y == approx_abs(0, 1e-12));
    CHECK(front.z == Approx(-1));

    UnitVector3 back = to_unit_vector(GazeAngles(kPi, 0));
    CHECK(back.z == Approx(1));

    UnitVector3 up = to_unit_vector(GazeAngles(0, kPi / 2));
    CHECK(up.y == Approx(1));
    CHECK(std::abs(up.x) + std::abs(up.z) < 1e-12);

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> yaw_d(-kPi, kPi), pitch_d(-kPi / 2, kPi / 2);
    for (int i = 0; i < 1000; ++i) {
        UnitVector3 v = to_unit_vector(GazeAngles(yaw_d(rng), pitch_d(rng)));
        CHECK(v.x * v.x + v.y * v.y + v.z * v.z == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("angular error basics") {
    GazeAngles a(0.7, 0.2);
    CHECK(angular_error(a, a) == approx_abs(0, 1e-12));
    CHECK(angular_error(GazeAngles(0, 0), GazeAngles(kPi, 0)) == Approx(kPi));
    CHECK(angular_error(GazeAngles(0, 0), GazeAngles(kPi / 2, 0)) == Approx(kPi / 2));

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> yaw_d(-kPi, kPi), pitch_d(-kPi / 2, kPi / 2);
    for (int i = 0; i < 1000; ++i) {
        GazeAngles p(yaw_d(rng), pitch_d(rng));
        GazeAngles q(yaw_d(rng), pitch_d(rng));
        const double pq = angular_error(p, q);
        CHECK(pq == Approx(angular_error(q, p)).epsilon(1e-12));
        CHECK(pq >= 0.0);
        CHECK(pq <= kPi);
    }
}

TEST_CASE("bin classification with closed boundaries toward the harder bin") {
    CHECK(classify_bin(0.1) == std::vector<GazeBin>{GazeBin::Front180, GazeBin::Front40});
    CHECK(classify_bin(1.0) == std::vector<GazeBin>{GazeBin::Front180});
    CHECK(classify_bin(-3.0) == std::vector<GazeBin>{GazeBin::Back});
    CHECK(classify_bin(kPi / 2) == std::vector<GazeBin>{GazeBin::Back});
    CHECK(classify_bin(-kPi / 2) == std::vector<GazeBin>{GazeBin::Back});
    CHECK(classify_bin(kPi / 9) == std::vector<GazeBin>{GazeBin::Front180, GazeBin::Front40});
    CHECK_THROWS_AS(classify_bin(4.0), std::invalid_argument);
}

TEST_CASE("round trip: encode then decode recovers the angles") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> yaw_d(-kPi + 1e-6, kPi - 1e-6);
    std::uniform_real_distribution<double> pitch_d(-kPi / 2 + 1e-9, kPi / 2 - 1e-9);
    for (int i = 0; i < 10000; ++i) {
        const double yaw = yaw_d(rng);
        const double pitch = pitch_d(rng);
        const EncodedGaze e = encode_gaze(GazeAngles(yaw, pitch));
        CHECK(std::abs(decode_yaw_sc(e) - yaw) < 1e-9);
        CHECK(std::abs(decode_yaw_wsc(e).yaw - yaw) < 1e-9);
        CHECK(std::abs(decode_pitch(e) - pitch) < 1e-9);
    }
    for (double yaw : {kPi, -kPi}) {
        const EncodedGaze e = encode_gaze(GazeAngles(yaw, 0));
        CHECK(circular_dist(decode_yaw_sc(e), yaw) < 1e-6);
        CHECK(circular_dist(decode_yaw_wsc(e).yaw, yaw) < 1e-6);
    }
}

TEST_CASE("branches agree on consistent encodings") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> yaw_d(-kPi + 1e-6, kPi - 1e-6);
    for (int i = 0; i < 5000; ++i) {
        const EncodedGaze e = encode_gaze(GazeAngles(yaw_d(rng), 0));
        CHECK(std::abs(decode_theta_s(e) - decode_theta_c(e)) < 1e-9);
    }
}

TEST_CASE("branches share a sign half-plane for any clamped input") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> comp(-1.5, 1.5);
    for (int i = 0; i < 20000; ++i) {
        const EncodedGaze e(comp(rng), comp(rng), 0);
        const double ts = decode_theta_s(e);
        const double tc = decode_theta_c(e);
        CHECK(ts * tc >= 0.0);
        const double w = decode_yaw_wsc(e).estimates.weight_w;
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
    }
}

TEST_CASE("weight endpoints: w=1 at mean 0, w=0 at mean +-pi/2") {
    CHECK(decode_yaw_wsc(EncodedGaze(0, 1, 0)).estimates.weight_w == Approx(1.0));
    // Consistent encode at pi/2 puts the branch mean at pi/2 exactly up to fp.
    CHECK(decode_yaw_wsc(EncodedGaze(1, 0, 0)).estimates.weight_w == approx_abs(0.0, 1e-12));
    CHECK(decode_yaw_wsc(EncodedGaze(-1, 0, 0)).estimates.weight_w == approx_abs(0.0, 1e-12));
}

TEST_CASE("noise sensitivity: sine branch wins near 0, cosine branch near 90 deg") {
    // Monte-Carlo oracle for the decoder conditioning argument.
    auto mean_branch_errors = [](double theta, std::uint32_t seed) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.05);
        double sum_s = 0.0, sum_c = 0.0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            const EncodedGaze clean = encode_gaze(GazeAngles(theta, 0));
            const EncodedGaze noisy(clean.s_theta + noise(rng), clean.c_theta + noise(rng), 0);
            sum_s += std::abs(decode_theta_s(noisy) - theta);
            sum_c += std::abs(decode_theta_c(noisy) - theta);
        }
        return std::pair{sum_s / trials, sum_c / trials};
    };

    const auto [s5, c5] = mean_branch_errors(5.0 * kPi / 180.0, 1234);
    CHECK(s5 < c5);
    const auto [s85, c85] = mean_branch_errors(85.0 * kPi / 180.0, 1234);
    CHECK(s85 > c85);
}
