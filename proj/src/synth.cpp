#include "gazekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

namespace gazekit {

namespace {

constexpr int kSide = 64;
constexpr double kBackground = 0.30;
constexpr double kPupilValue = 0.05;
constexpr double kMaxRadius = 22.4;
constexpr double kPupilOffsetFrac = 0.6;
constexpr double kPupilRadiusFrac = 0.12;

// Independent per-sample streams from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Approximate pixel coverage of a disc boundary: full inside, linear ramp
// across the edge pixel.
double disc_coverage(double dist, double radius) {
    return std::clamp(radius - dist + 0.5, 0.0, 1.0);
}

double quantize8(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

RenderParams::RenderParams(double yaw_rad, double pitch_rad, double scale_frac, double noise,
                           std::uint64_t seed_val)
    : yaw(yaw_rad), pitch(pitch_rad), scale(scale_frac), noise_amp(noise), seed(seed_val) {
    GazeAngles check(yaw, pitch);  // validates angle ranges
    (void)check;
    if (!(scale >= 0.5 && scale <= 1.0)) {
        throw std::invalid_argument("RenderParams: scale outside [0.5, 1.0]");
    }
    if (noise_amp < 0.0) {
        throw std::invalid_argument("RenderParams: noise_amp must be non-negative");
    }
}

Image render(const RenderParams& p) {
    const double cx = (kSide - 1) / 2.0;
    const double cy = cx;
    const double r = kMaxRadius * p.scale;
    const double fill = 0.5 + 0.35 * std::cos(p.yaw);
    const double pr = std::max(1.0, kPupilRadiusFrac * r);
    const double px = cx + kPupilOffsetFrac * r * std::sin(p.yaw);
    const double py = cy - kPupilOffsetFrac * r * std::sin(p.pitch);

    Image img(kSide, kBackground);
    for (int row = 0; row < kSide; ++row) {
        for (int col = 0; col < kSide; ++col) {
            const double dd = std::hypot(col - cx, row - cy);
            double v = kBackground + disc_coverage(dd, r) * (fill - kBackground);
            const double dp = std::hypot(col - px, row - py);
            v += disc_coverage(dp, pr) * (kPupilValue - v);
            img.at(row, col) = v;
        }
    }
    if (p.noise_amp > 0.0) {
        std::mt19937_64 rng(p.seed);
        std::uniform_real_distribution<double> noise(-p.noise_amp, p.noise_amp);
        for (double& v : img.data()) {
            v += noise(rng);
        }
    }
    for (double& v : img.data()) {
        v = quantize8(v);
    }
    return img;
}

GazeAngles oracle_decode(const Image& img) {
    const int side = img.side();
    const double cx = (side - 1) / 2.0;
    const double cy = cx;

    // Coarse pupil location: the pupil is the only region darker than 0.10.
    double sum_x = 0.0, sum_y = 0.0;
    int count = 0;
    for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
            if (img.at(row, col) <= 0.10) {
                sum_x += col;
                sum_y += row;
                ++count;
            }
        }
    }
    if (count == 0) {
        throw DecodeError("oracle_decode: no pupil found");
    }
    double px = sum_x / count;
    double py = sum_y / count;
    const double pr_coarse = std::max(1.0, std::sqrt(count / std::numbers::pi));

    // Disc fill brightness from the half-annulus around the pupil facing the
    // image center. Those pixels lie strictly inside the disc even when the
    // pupil sits against the disc boundary.
    std::vector<double> ring;
    for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
            const double dx = col - px;
            const double dy = row - py;
            const double d = std::hypot(dx, dy);
            if (d < pr_coarse + 0.8 || d > pr_coarse + 4.0) {
                continue;
            }
            if (dx * (cx - px) + dy * (cy - py) >= 0.0 || (px == cx && py == cy)) {
                ring.push_back(img.at(row, col));
            }
        }
    }
    if (ring.empty()) {
        throw DecodeError("oracle_decode: no disc ring around pupil");
    }
    std::nth_element(ring.begin(), ring.begin() + ring.size() / 2, ring.end());
    const double fill = ring[ring.size() / 2];
    const double c = std::clamp((fill - 0.5) / 0.35, -1.0, 1.0);

    // Disc radius from the covered area: a pixel counts when it differs from
    // the background by more than half the fill contrast, which is unbiased
    // across the anti-aliased rim and immune to noise well below |contrast|/2.
    // When the fill nearly matches the background the disc boundary is
    // invisible and the radius instead comes from the pupil offset plus the
    // circle constraint |sin| = sqrt(1 - cos^2) (low contrast implies a large
    // |sin|, so that estimate is well conditioned exactly where it is needed).
    const double bg_q = quantize8(kBackground);
    const double contrast = fill - bg_q;
    const bool high_contrast = std::abs(contrast) >= 0.07;
    double r = 0.0;
    if (high_contrast) {
        double area = 0.0;
        for (int row = 0; row < side; ++row) {
            for (int col = 0; col < side; ++col) {
                if (std::hypot(col - px, row - py) <= pr_coarse + 1.0 ||
                    std::abs(img.at(row, col) - bg_q) > std::abs(contrast) / 2) {
                    area += 1.0;
                }
            }
        }
        r = std::sqrt(area / std::numbers::pi);
        if (r < 1.0) {
            throw DecodeError("oracle_decode: no disc found");
        }
    }

    // Refined pupil centroid, weighted by a ramp from the fill value down to
    // the pupil value. Radial symmetry makes any such profile unbiased; the
    // ramp top sits a noise margin below the fill so noisy fill pixels carry
    // no weight. A pupil riding the disc boundary blends with the background
    // instead of the fill; there the ramp stops at three-quarters coverage,
    // which zeroes the contaminated outer rim.
    const bool boundary_near =
        high_contrast && std::hypot(px - cx, py - cy) + pr_coarse + 1.5 > r - 0.5;
    const double quarter = kPupilValue + 0.25 * (fill - kPupilValue);
    const double top = boundary_near ? quarter : std::max(fill - 0.045, quarter);
    const int hw = static_cast<int>(std::ceil(pr_coarse)) + 2;
    const int prow = static_cast<int>(std::lround(py));
    const int pcol = static_cast<int>(std::lround(px));
    double wsum = 0.0, wx = 0.0, wy = 0.0;
    for (int row = std::max(0, prow - hw); row <= std::min(side - 1, prow + hw); ++row) {
        for (int col = std::max(0, pcol - hw); col <= std::min(side - 1, pcol + hw); ++col) {
            if (high_contrast && !boundary_near && std::hypot(col - cx, row - cy) > r - 0.7) {
                continue;
            }
            const double w = std::clamp((top - img.at(row, col)) / (top - kPupilValue), 0.0, 1.0);
            wsum += w;
            wx += w * col;
            wy += w * row;
        }
    }
    if (wsum > 0.0) {
        px = wx / wsum;
        py = wy / wsum;
    }
    const double off_x = px - cx;
    const double off_y = -(py - cy);
    if (!high_contrast) {
        const double abs_sin = std::sqrt(std::max(1.0 - c * c, 1e-6));
        r = std::abs(off_x) / (kPupilOffsetFrac * abs_sin);
    }
    // |sin yaw| <= 1 and |sin pitch| <= 1 put hard floors under the radius.
    r = std::max({r, std::abs(off_x) / kPupilOffsetFrac, std::abs(off_y) / kPupilOffsetFrac});
    if (r < 1.0) {
        throw DecodeError("oracle_decode: no disc found");
    }

    const double s = std::clamp(off_x / (kPupilOffsetFrac * r), -1.0, 1.0);
    const double s_phi = std::clamp(off_y / (kPupilOffsetFrac * r), -1.0, 1.0);
    return GazeAngles(std::atan2(s, c), std::asin(s_phi));
}

namespace {

std::map<std::string, double> sample_meta(double scale) {
    const double r = kMaxRadius * scale;
    const double bbox_side = 2.0 * r / kSide;
    return {{"scale", scale}, {"bbox_area", bbox_side * bbox_side}, {"distance", 1.0 / scale}};
}

}  // namespace

std::vector<Sample> generate_dataset(int n, std::uint64_t seed, Range yaw_range, Range pitch_range,
                                     Range scale_range, double noise_amp) {
    if (n < 1) {
        throw std::invalid_argument("generate_dataset: n must be >= 1");
    }
    for (const Range& rg : {yaw_range, pitch_range, scale_range}) {
        if (rg.lo > rg.hi) {
            throw std::invalid_argument("generate_dataset: empty range");
        }
    }
    std::vector<Sample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> yaw_d(yaw_range.lo, yaw_range.hi);
        std::uniform_real_distribution<double> pitch_d(pitch_range.lo, pitch_range.hi);
        std::uniform_real_distribution<double> scale_d(scale_range.lo, scale_range.hi);
        const double yaw = yaw_d(rng);
        const double pitch = pitch_d(rng);
        const double scale = scale_d(rng);
        RenderParams p(yaw, pitch, scale, noise_amp, rng());
        Sample s{render(p), GazeAngles(yaw, pitch), sample_meta(scale)};
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> generate_sequence(int n_frames, const GazeAngles& start, double drift_per_frame,
                                      double scale, std::uint64_t seed, double noise_amp) {
    if (n_frames < 1 || n_frames % 2 == 0) {
        throw std::invalid_argument("generate_sequence: frame count must be odd and positive");
    }
    std::vector<Sample> out;
    out.reserve(n_frames);
    const int target = n_frames / 2;
    for (int i = 0; i < n_frames; ++i) {
        const double yaw = start.yaw + i * drift_per_frame;
        if (yaw < -std::numbers::pi || yaw > std::numbers::pi) {
            throw std::invalid_argument("generate_sequence: yaw drifts outside [-pi, pi]");
        }
        RenderParams p(yaw, start.pitch, scale, noise_amp, mix_seed(seed, static_cast<std::uint64_t>(i)));
        Sample s{render(p), GazeAngles(yaw, start.pitch), sample_meta(scale)};
        s.meta["seq_frame"] = i;
        s.meta["seq_target"] = i == target ? 1.0 : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_manifest: cannot open " + path.string());
    }
    const std::filesystem::path base = path.parent_path();
    std::vector<Sample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("load_manifest: bad JSON at " + where + ": " + e.what());
        }
        if (!rec.contains("image") || !rec.contains("yaw_rad") || !rec.contains("pitch_rad")) {
            throw std::runtime_error("load_manifest: missing image/yaw_rad/pitch_rad at " + where);
        }
        Sample s;
        try {
            s.label = GazeAngles(rec["yaw_rad"].get<double>(), rec["pitch_rad"].get<double>());
        } catch (const std::exception& e) {
            throw std::runtime_error("load_manifest: bad label at " + where + ": " + e.what());
        }
        if (rec.contains("meta")) {
            try {
                for (const auto& [key, value] : rec["meta"].items()) {
                    s.meta[key] = value.get<double>();
                }
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error("load_manifest: bad meta at " + where + ": " + e.what());
            }
        }
        try {
            s.image = read_pgm(base / rec["image"].get<std::string>());
        } catch (const std::exception& e) {
            throw std::runtime_error("load_manifest: bad image at " + where + ": " + e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

void save_manifest(const std::vector<Sample>& samples, const std::filesystem::path& path,
                   const std::string& image_prefix) {
    const std::filesystem::path base = path.parent_path();
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("save_manifest: cannot open " + path.string());
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::ostringstream name;
        name << image_prefix;
        name.width(6);
        name.fill('0');
        name << i;
        name << ".pgm";
        write_pgm(samples[i].image, base / name.str());
        nlohmann::json rec;
        rec["image"] = name.str();
        rec["yaw_rad"] = samples[i].label.yaw;
        rec["pitch_rad"] = samples[i].label.pitch;
        if (!samples[i].meta.empty()) {
            rec["meta"] = samples[i].meta;
        }
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw std::runtime_error("save_manifest: write failed: " + path.string());
    }
}

}  // namespace gazekit
