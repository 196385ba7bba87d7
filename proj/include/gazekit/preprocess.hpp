#pragma once

#include <cstdint>
#include <vector>

#include "gazekit/image.hpp"

namespace gazekit {

/// Strictly decreasing list of center-crop sizes driving the multi-scale
/// expansion. Sizes must be >= 8; the fit against a concrete image side is
/// checked where the schedule is applied.
class CropSchedule {
  public:
    explicit CropSchedule(std::vector<int> sizes);

    const std::vector<int>& sizes() const { return sizes_; }
    std::size_t size() const { return sizes_.size(); }

  private:
    std::vector<int> sizes_;
};

/// How a frame sequence is paired with crop sizes. Schedule length is
/// always 2T+1 for a schedule of T+1 sizes.
struct SequenceScheduleKind {
    enum class Tag { ZoomInMiddle, ZoomInLast, Reverse, Random };
    Tag tag = Tag::ZoomInMiddle;
    std::uint64_t seed = 0;  // used by Random only

    static SequenceScheduleKind zoom_in_middle() { return {Tag::ZoomInMiddle, 0}; }
    static SequenceScheduleKind zoom_in_last() { return {Tag::ZoomInLast, 0}; }
    static SequenceScheduleKind reverse() { return {Tag::Reverse, 0}; }
    static SequenceScheduleKind random(std::uint64_t seed) { return {Tag::Random, seed}; }
};

/// Central size x size window. For an odd margin the offset floors toward
/// the top-left corner. Rejects size <= 0 or size > side.
Image center_crop(const Image& img, int size);

/// Bilinear resampling with half-pixel centers: the source coordinate for
/// destination index d is (d + 0.5) * in/out - 0.5, clamped to the image.
Image resize_bilinear(const Image& img, int out_side);

/// One crop-and-restore image per schedule entry, all at the input side.
std::vector<Image> expand_static(const Image& img, const CropSchedule& schedule);

/// Per-frame crop sizes for a 2T+1 frame sequence.
/// ZoomInMiddle: C0..CT..C0 (palindrome, strongest zoom on the middle frame).
/// ZoomInLast:   C0,C0,C1,C1,..,C(T-1),C(T-1),CT.
/// Reverse:      ZoomInLast reversed.
/// Random:       seeded permutation of the ZoomInLast multiset.
std::vector<int> sequence_crop_sizes(const CropSchedule& schedule, const SequenceScheduleKind& kind);

/// Index of the frame whose gaze the sequence model predicts: the middle
/// frame for ZoomInMiddle/Random, the last frame for ZoomInLast/Reverse.
std::size_t sequence_target_index(const SequenceScheduleKind& kind, std::size_t n_frames);

/// Evaluation-time zoom perturbations: crop side-c and restore (zoom in),
/// or pad c/2 zero pixels per border and shrink back (zoom out; c even).
Image perturb_zoom_in(const Image& img, int c);
Image perturb_zoom_out(const Image& img, int c);

}  // namespace gazekit
