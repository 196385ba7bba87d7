#include "gazekit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gazekit {

CropSchedule::CropSchedule(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
        throw std::invalid_argument("CropSchedule: empty");
    }
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        if (sizes_[i] < 8) {
            throw std::invalid_argument("CropSchedule: sizes must be >= 8");
        }
        if (i > 0 && sizes_[i] >= sizes_[i - 1]) {
            throw std::invalid_argument("CropSchedule: sizes must be strictly decreasing");
        }
    }
}

Image center_crop(const Image& img, int size) {
    if (size <= 0 || size > img.side()) {
        throw std::invalid_argument("center_crop: size must lie in (0, side]");
    }
    const int off = (img.side() - size) / 2;
    Image out(size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            out.at(r, c) = img.at(r + off, c + off);
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, int out_side) {
    if (out_side < 1) {
        throw std::invalid_argument("resize_bilinear: out_side must be >= 1");
    }
    const int in_side = img.side();
    if (out_side == in_side) {
        return img;
    }
    const double scale = static_cast<double>(in_side) / out_side;
    Image out(out_side);

    // Source positions and interpolation weights are the same along both axes.
    std::vector<int> lo(out_side);
    std::vector<double> frac(out_side);
    for (int d = 0; d < out_side; ++d) {
        double src = (d + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_side - 1));
        const double fl = std::floor(src);
        lo[d] = static_cast<int>(fl);
        frac[d] = src - fl;
    }
    for (int r = 0; r < out_side; ++r) {
        const int r0 = lo[r];
        const int r1 = std::min(r0 + 1, in_side - 1);
        const double fy = frac[r];
        for (int c = 0; c < out_side; ++c) {
            const int c0 = lo[c];
            const int c1 = std::min(c0 + 1, in_side - 1);
            const double fx = frac[c];
            const double top = img.at(r0, c0) * (1.0 - fx) + img.at(r0, c1) * fx;
            const double bot = img.at(r1, c0) * (1.0 - fx) + img.at(r1, c1) * fx;
            out.at(r, c) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

std::vector<Image> expand_static(const Image& img, const CropSchedule& schedule) {
    std::vector<Image> out;
    out.reserve(schedule.size());
    for (int size : schedule.sizes()) {
        out.push_back(resize_bilinear(center_crop(img, size), img.side()));
    }
    return out;
}

std::vector<int> sequence_crop_sizes(const CropSchedule& schedule, const SequenceScheduleKind& kind) {
    const std::vector<int>& c = schedule.sizes();
    const std::size_t t = c.size() - 1;

    auto zoom_in_last = [&] {
        std::vector<int> out;
        out.reserve(2 * t + 1);
        for (std::size_t i = 0; i < t; ++i) {
            out.push_back(c[i]);
            out.push_back(c[i]);
        }
        out.push_back(c[t]);
        return out;
    };

    switch (kind.tag) {
        case SequenceScheduleKind::Tag::ZoomInMiddle: {
            std::vector<int> out(c.begin(), c.end());
            for (std::size_t i = t; i-- > 0;) {
                out.push_back(c[i]);
            }
            return out;
        }
        case SequenceScheduleKind::Tag::ZoomInLast:
            return zoom_in_last();
        case SequenceScheduleKind::Tag::Reverse: {
            std::vector<int> out = zoom_in_last();
            std::reverse(out.begin(), out.end());
            return out;
        }
        case SequenceScheduleKind::Tag::Random: {
            std::vector<int> out = zoom_in_last();
            std::mt19937_64 rng(kind.seed);
            std::shuffle(out.begin(), out.end(), rng);
            return out;
        }
    }
    throw std::logic_error("sequence_crop_sizes: unknown kind");
}

std::size_t sequence_target_index(const SequenceScheduleKind& kind, std::size_t n_frames) {
    if (n_frames == 0 || n_frames % 2 == 0) {
        throw std::invalid_argument("sequence_target_index: frame count must be odd");
    }
    switch (kind.tag) {
        case SequenceScheduleKind::Tag::ZoomInMiddle:
        case SequenceScheduleKind::Tag::Random:
            return n_frames / 2;
        case SequenceScheduleKind::Tag::ZoomInLast:
        case SequenceScheduleKind::Tag::Reverse:
            return n_frames - 1;
    }
    throw std::logic_error("sequence_target_index: unknown kind");
}

Image perturb_zoom_in(const Image& img, int c) {
    if (c <= 0 || c >= img.side()) {
        throw std::invalid_argument("perturb_zoom_in: c must lie in (0, side)");
    }
    return resize_bilinear(center_crop(img, img.side() - c), img.side());
}

Image perturb_zoom_out(const Image& img, int c) {
    if (c <= 0 || c % 2 != 0) {
        throw std::invalid_argument("perturb_zoom_out: c must be positive and even");
    }
    const int pad = c / 2;
    Image padded(img.side() + c, 0.0);
    for (int r = 0; r < img.side(); ++r) {
        for (int col = 0; col < img.side(); ++col) {
            padded.at(r + pad, col + pad) = img.at(r, col);
        }
    }
    return resize_bilinear(padded, img.side());
}

}  // namespace gazekit
