#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/image.hpp"

namespace gazekit {

/// One labeled head image plus free-form numeric metadata.
struct Sample {
    Image image;
    GazeAngles label{0.0, 0.0};
    std::map<std::string, double> meta;
};

struct RenderParams {
    RenderParams(double yaw_rad, double pitch_rad, double scale_frac, double noise = 0.02,
                 std::uint64_t seed_val = 0);

    double yaw;
    double pitch;
    double scale;      // head radius fraction of maximum, in [0.5, 1.0]
    double noise_amp;  // uniform additive noise amplitude, >= 0
    std::uint64_t seed;
};

/// Thrown by oracle_decode when no head disc / pupil can be located.
struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Renders a 64x64 synthetic head: a centered disc of radius 22.4*scale
/// whose fill brightness is 0.5 + 0.35*cos(yaw) over a 0.30 background,
/// with a dark pupil offset by 0.6*r*(sin yaw, -sin pitch). Brightness
/// carries the yaw cosine and the pupil position the yaw/pitch sines, so
/// the full circle of yaws stays identifiable. Output is quantized to the
/// 8-bit grid, making PGM round trips exact.
Image render(const RenderParams& p);

/// Closed-form inversion of render: recovers the label from disc
/// brightness and pupil offset. Accurate to about 1 degree without noise
/// and 3 degrees at the default noise amplitude; pitch precision decays
/// near +-pi/2 where the arcsine of the pupil offset loses conditioning.
GazeAngles oracle_decode(const Image& img);

struct Range {
    double lo;
    double hi;
};

/// Deterministic sampling of (yaw, pitch, scale) with per-sample render
/// seeds derived from (seed, index). Meta records scale, bbox_area and a
/// distance proxy.
std::vector<Sample> generate_dataset(int n, std::uint64_t seed, Range yaw_range, Range pitch_range,
                                     Range scale_range, double noise_amp = 0.02);

/// A 2T+1 frame clip whose yaw drifts linearly; the middle frame carries
/// the sequence target label. Meta records seq_frame and seq_target.
std::vector<Sample> generate_sequence(int n_frames, const GazeAngles& start, double drift_per_frame,
                                      double scale, std::uint64_t seed, double noise_amp = 0.02);

/// JSON-Lines manifest: one {"image": ..., "yaw_rad": ..., "pitch_rad": ...,
/// "meta": {...}} record per line, image paths relative to the manifest.
std::vector<Sample> load_manifest(const std::filesystem::path& path);

/// Writes PGM files named by image_prefix plus the manifest itself.
void save_manifest(const std::vector<Sample>& samples, const std::filesystem::path& path,
                   const std::string& image_prefix = "img_");

}  // namespace gazekit
