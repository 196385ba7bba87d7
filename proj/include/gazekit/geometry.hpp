#pragma once

#include <vector>

namespace gazekit {

/// Gaze direction as yaw/pitch in radians. Yaw covers the full circle
/// [-pi, pi]; pitch is limited to [-pi/2, pi/2]. Construction outside
/// these ranges throws std::invalid_argument.
struct GazeAngles {
    GazeAngles(double yaw_rad, double pitch_rad);

    double yaw;
    double pitch;
};

/// Trigonometric target triple (sin yaw, cos yaw, sin pitch).
/// Components are clamped to [-1, 1] on construction so that activation
/// overshoot or float drift never reaches asin/acos out of domain.
struct EncodedGaze {
    EncodedGaze(double s_theta_in, double c_theta_in, double s_phi_in);

    double s_theta;
    double c_theta;
    double s_phi;
};

/// The two single-branch yaw estimates and the weight given to the
/// sine branch by the weighted average.
struct YawEstimates {
    double theta_s;
    double theta_c;
    double weight_w;
};

struct UnitVector3 {
    double x;
    double y;
    double z;
};

/// Yaw categories used by the evaluation protocol. Front40 is a subset
/// of Front180.
enum class GazeBin { Back, Front180, Front40 };

/// sign convention used by both decode branches: +1 for x >= 0, -1 otherwise.
double sign_nonneg(double x);

EncodedGaze encode_gaze(const GazeAngles& angles);

/// Sine-branch yaw: asin(s) reflected into the back half-circle when the
/// cosine is negative. Result in [-pi, pi].
double decode_theta_s(const EncodedGaze& e);

/// Cosine-branch yaw: acos(c) signed by the sine. Result in [-pi, pi].
double decode_theta_c(const EncodedGaze& e);

/// Plain average of the two branch estimates.
double decode_yaw_sc(const EncodedGaze& e);

/// Weighted average w*theta_s + (1-w)*theta_c with
/// w = |cos((theta_s + theta_c)/2)|, so the sine branch dominates near 0
/// and the cosine branch dominates near +-pi/2.
struct WscDecode {
    double yaw;
    YawEstimates estimates;
};
WscDecode decode_yaw_wsc(const EncodedGaze& e);

double decode_pitch(const EncodedGaze& e);

/// 3D gaze ray; (0,0) looks along -z, pitch pi/2 straight up (+y).
UnitVector3 to_unit_vector(const GazeAngles& angles);

/// Angle between the two gaze rays, in [0, pi].
double angular_error(const GazeAngles& a, const GazeAngles& b);

/// Bin membership for a ground-truth yaw. Returns {Back} or {Front180}
/// or {Front180, Front40}. |yaw| = pi/2 goes to Back, |yaw| = pi/9 stays
/// in Front40.
std::vector<GazeBin> classify_bin(double yaw);

bool is_back(double yaw);
bool is_front180(double yaw);
bool is_front40(double yaw);

}  // namespace gazekit
