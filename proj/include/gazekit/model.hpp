#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/image.hpp"
#include "gazekit/output.hpp"
#include "gazekit/preprocess.hpp"
#include "gazekit/synth.hpp"

namespace gazekit {

/// C x H x W activation tensor, row-major within each channel.
struct FeatureMap {
    FeatureMap() = default;
    FeatureMap(int c, int h, int w) : channels(c), height(h), width(w) {
        v.assign(static_cast<std::size_t>(c) * h * w, 0.0);
    }

    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v;

    double& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return v[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

struct Tensor {
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> d);

    std::vector<std::size_t> dims;
    std::vector<double> v;

    std::size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

enum class Aggregation { spatial_max, max_1d, single_scale };
enum class LossKind { pinball, regularized };
enum class Decoder { sc, wsc, raw };

/// Architecture switches. The dense head is 16->64 except in max_1d mode,
/// where the per-scale feature vector is widened to 256 before aggregation.
struct ModelSpec {
    HeadMode head_mode = HeadMode::encoded;
    Aggregation aggregation = Aggregation::spatial_max;

    int hidden_width() const { return aggregation == Aggregation::max_1d ? 256 : 64; }
    int output_width() const { return head_mode == HeadMode::encoded ? 4 : 3; }
};

/// All trainable tensors of the desk backbone:
/// conv1 8@3x3/s2, conv2 16@3x3/s2, conv3 16@3x3/s2, then GAP and the
/// dense head. Also used as the gradient and Adam moment container.
struct BackboneParams {
    ModelSpec spec;
    Tensor conv1_w, conv1_b;
    Tensor conv2_w, conv2_b;
    Tensor conv3_w, conv3_b;
    Tensor fc1_w, fc1_b;
    Tensor fc2_w, fc2_b;

    /// Shape the tensors for a spec, weights from a seeded fan-in Gaussian
    /// (std = sqrt(2/fan_in)), biases zero.
    static BackboneParams init(const ModelSpec& spec, std::uint64_t seed);
    static BackboneParams zeros(const ModelSpec& spec);

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

/// conv1..conv3 with ReLU after each stage; 64x64 input -> 16x8x8 map.
FeatureMap backbone_forward(const Image& img, const BackboneParams& params);

/// Elementwise max across same-shaped maps, with the winning scale index
/// per element for gradient routing (ties go to the lowest index).
struct AggregatedMap {
    FeatureMap map;
    std::vector<std::uint16_t> argmax;
};
AggregatedMap aggregate_spatial_max(const std::vector<FeatureMap>& maps);

struct AggregatedVec {
    std::vector<double> vec;
    std::vector<std::uint16_t> argmax;
};
AggregatedVec aggregate_max_1d(const std::vector<std::vector<double>>& features);

/// GAP -> dense(hidden) -> ReLU -> dense(out) -> output activations
/// (tanh triple + sigmoid sigma in encoded mode; pi*tanh, pi/2*tanh and
/// sigmoid in raw mode).
ModelOutput head_forward(const FeatureMap& fm, const BackboneParams& params);

/// Full multi-scale forward: expand_static, per-scale backbone, aggregate,
/// head. single_scale aggregation truncates the schedule to its first size.
ModelOutput forward_msa(const Image& img, const CropSchedule& schedule, const BackboneParams& params);

/// Sequence forward over 2T+1 frames cropped per sequence_crop_sizes.
ModelOutput forward_sequence(const std::vector<Image>& frames, const CropSchedule& schedule,
                             const SequenceScheduleKind& kind, const BackboneParams& params);

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 64;
    int epochs = 1;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossKind loss = LossKind::pinball;
    double reg_weight = 0.9;
    HeadMode head_mode = HeadMode::encoded;
    Aggregation aggregation = Aggregation::spatial_max;
    std::vector<int> crops = {64, 57, 50, 43};
    double val_fraction = 0.1;

    ModelSpec model_spec() const { return ModelSpec{head_mode, aggregation}; }
};

/// Mean loss over a batch, forward only. The finite-difference oracle in
/// the tests perturbs parameters against this.
double batch_loss(const std::vector<const Sample*>& batch, const CropSchedule& schedule,
                  const BackboneParams& params, const TrainConfig& config);

/// Forward with cached activations plus full backpropagation. Gradients are
/// averaged over the batch; the spatial-max stage routes each element's
/// gradient to its argmax scale only.
struct BatchGrad {
    BackboneParams grads;
    double loss = 0.0;
};
BatchGrad backward(const std::vector<const Sample*>& batch, const CropSchedule& schedule,
                   const BackboneParams& params, const TrainConfig& config);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_error_rad = 0.0;  // NaN when no validation split
};

struct TrainResult {
    BackboneParams params;
    std::vector<EpochStats> history;
};

/// Thrown when training encounters a non-finite loss.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Seeded init, seeded epoch shuffling, Adam updates. Bitwise deterministic
/// for a fixed seed; single-threaded.
TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& config);

/// Decode a head output into angles; the decoder must match the head mode.
GazeAngles predict_angles(const ModelOutput& out, Decoder decoder);

}  // namespace gazekit
