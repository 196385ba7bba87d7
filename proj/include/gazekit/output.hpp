#pragma once

namespace gazekit {

enum class HeadMode { encoded, raw };

/// Network head output. In encoded mode the triple (s_theta, c_theta, s_phi)
/// lives in (-1,1) via tanh; in raw mode theta in (-pi,pi) and phi in
/// (-pi/2,pi/2) via scaled tanh. sigma in (0,1) via sigmoid in both modes.
struct ModelOutput {
    HeadMode mode = HeadMode::encoded;
    // encoded-mode fields
    double s_theta = 0.0;
    double c_theta = 0.0;
    double s_phi = 0.0;
    // raw-mode fields
    double theta = 0.0;
    double phi = 0.0;
    // shared uncertainty
    double sigma = 0.5;
};

}  // namespace gazekit
