#include "gazekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gazekit {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

GazeAngles::GazeAngles(double yaw_rad, double pitch_rad) : yaw(yaw_rad), pitch(pitch_rad) {
    if (!(yaw >= -kPi && yaw <= kPi)) {
        throw std::invalid_argument("GazeAngles: yaw outside [-pi, pi]");
    }
    if (!(pitch >= -kPi / 2 && pitch <= kPi / 2)) {
        throw std::invalid_argument("GazeAngles: pitch outside [-pi/2, pi/2]");
    }
}

EncodedGaze::EncodedGaze(double s_theta_in, double c_theta_in, double s_phi_in)
    : s_theta(clamp_unit(s_theta_in)), c_theta(clamp_unit(c_theta_in)), s_phi(clamp_unit(s_phi_in)) {}

double sign_nonneg(double x) { return x >= 0.0 ? 1.0 : -1.0; }

EncodedGaze encode_gaze(const GazeAngles& angles) {
    return EncodedGaze(std::sin(angles.yaw), std::cos(angles.yaw), std::sin(angles.pitch));
}

double decode_theta_s(const EncodedGaze& e) {
    const double a = std::asin(e.s_theta);
    if (sign_nonneg(e.c_theta) > 0.0) {
        return a;
    }
    return sign_nonneg(e.s_theta) * kPi - a;
}

double decode_theta_c(const EncodedGaze& e) {
    return sign_nonneg(e.s_theta) * std::acos(e.c_theta);
}

double decode_yaw_sc(const EncodedGaze& e) {
    return 0.5 * (decode_theta_s(e) + decode_theta_c(e));
}

WscDecode decode_yaw_wsc(const EncodedGaze& e) {
    const double theta_s = decode_theta_s(e);
    const double theta_c = decode_theta_c(e);
    const double w = std::abs(std::cos(0.5 * (theta_s + theta_c)));
    const double yaw = w * theta_s + (1.0 - w) * theta_c;
    return WscDecode{yaw, YawEstimates{theta_s, theta_c, w}};
}

double decode_pitch(const EncodedGaze& e) { return std::asin(e.s_phi); }

UnitVector3 to_unit_vector(const GazeAngles& angles) {
    const double cp = std::cos(angles.pitch);
    return UnitVector3{-cp * std::sin(angles.yaw), std::sin(angles.pitch), -cp * std::cos(angles.yaw)};
}

double angular_error(const GazeAngles& a, const GazeAngles& b) {
    const UnitVector3 va = to_unit_vector(a);
    const UnitVector3 vb = to_unit_vector(b);
    const double dot = va.x * vb.x + va.y * vb.y + va.z * vb.z;
    return std::acos(clamp_unit(dot));
}

bool is_back(double yaw) { return std::abs(yaw) >= kPi / 2; }
bool is_front180(double yaw) { return std::abs(yaw) < kPi / 2; }
bool is_front40(double yaw) { return std::abs(yaw) <= kPi / 9; }

std::vector<GazeBin> classify_bin(double yaw) {
    if (!(yaw >= -kPi && yaw <= kPi)) {
        throw std::invalid_argument("classify_bin: yaw outside [-pi, pi]");
    }
    if (is_back(yaw)) {
        return {GazeBin::Back};
    }
    if (is_front40(yaw)) {
        return {GazeBin::Front180, GazeBin::Front40};
    }
    return {GazeBin::Front180};
}

}  // namespace gazekit
