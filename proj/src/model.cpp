#include "gazekit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gazekit/loss.hpp"

namespace gazekit {

namespace {

constexpr int kInputSide = 64;
constexpr double kPi = std::numbers::pi;

std::size_t dim_product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        n *= d;
    }
    return n;
}

void shape_map(FeatureMap& fm, int c, int h, int w) {
    fm.channels = c;
    fm.height = h;
    fm.width = w;
    fm.v.resize(static_cast<std::size_t>(c) * h * w);
}

// 3x3 convolution, stride 2, zero padding 1. Input sides must be even.
void conv_forward(const FeatureMap& in, const Tensor& w, const Tensor& b, FeatureMap& out) {
    const int oc_n = static_cast<int>(w.dims[0]);
    const int ic_n = static_cast<int>(w.dims[1]);
    const int oh = in.height / 2;
    const int ow = in.width / 2;
    shape_map(out, oc_n, oh, ow);
    const double* wp = w.v.data();
    const double* inp = in.v.data();
    const std::size_t plane = static_cast<std::size_t>(in.height) * in.width;
    for (int oc = 0; oc < oc_n; ++oc) {
        const double bias = b.v[oc];
        for (int oy = 0; oy < oh; ++oy) {
            const int iy0 = 2 * oy - 1;
            for (int ox = 0; ox < ow; ++ox) {
                const int ix0 = 2 * ox - 1;
                double acc = bias;
                for (int ic = 0; ic < ic_n; ++ic) {
                    const double* wk = wp + (static_cast<std::size_t>(oc) * ic_n + ic) * 9;
                    const double* base = inp + ic * plane;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= in.height) {
                            continue;
                        }
                        const double* row = base + static_cast<std::size_t>(iy) * in.width;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ix0 + kx;
                            if (ix < 0 || ix >= in.width) {
                                continue;
                            }
                            acc += wk[ky * 3 + kx] * row[ix];
                        }
                    }
                }
                out.at(oc, oy, ox) = acc;
            }
        }
    }
}

// Accumulates d_w/d_b and, when d_in is non-null, the input gradient.
void conv_backward(const FeatureMap& in, const Tensor& w, const FeatureMap& d_out, FeatureMap* d_in,
                   Tensor& d_w, Tensor& d_b) {
    const int oc_n = static_cast<int>(w.dims[0]);
    const int ic_n = static_cast<int>(w.dims[1]);
    const std::size_t plane = static_cast<std::size_t>(in.height) * in.width;
    const double* inp = in.v.data();
    double* dinp = d_in ? d_in->v.data() : nullptr;
    for (int oc = 0; oc < oc_n; ++oc) {
        for (int oy = 0; oy < d_out.height; ++oy) {
            const int iy0 = 2 * oy - 1;
            for (int ox = 0; ox < d_out.width; ++ox) {
                const double g = d_out.at(oc, oy, ox);
                if (g == 0.0) {
                    continue;
                }
                d_b.v[oc] += g;
                const int ix0 = 2 * ox - 1;
                for (int ic = 0; ic < ic_n; ++ic) {
                    const std::size_t wk = (static_cast<std::size_t>(oc) * ic_n + ic) * 9;
                    const double* base = inp + ic * plane;
                    double* dbase = dinp ? dinp + ic * plane : nullptr;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= in.height) {
                            continue;
                        }
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ix0 + kx;
                            if (ix < 0 || ix >= in.width) {
                                continue;
                            }
                            const std::size_t at = static_cast<std::size_t>(iy) * in.width + ix;
                            d_w.v[wk + ky * 3 + kx] += g * base[at];
                            if (dbase) {
                                dbase[at] += g * w.v[wk + ky * 3 + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

void relu_inplace(FeatureMap& fm) {
    for (double& x : fm.v) {
        x = x > 0.0 ? x : 0.0;
    }
}

// d_pre = d_act masked by act > 0 (valid because act stores post-ReLU values).
void relu_mask(const FeatureMap& act, FeatureMap& d_act) {
    for (std::size_t i = 0; i < act.v.size(); ++i) {
        if (act.v[i] <= 0.0) {
            d_act.v[i] = 0.0;
        }
    }
}

std::vector<double> gap_forward(const FeatureMap& fm) {
    std::vector<double> out(fm.channels, 0.0);
    const std::size_t plane = static_cast<std::size_t>(fm.height) * fm.width;
    for (int c = 0; c < fm.channels; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            acc += fm.v[c * plane + i];
        }
        out[c] = acc / static_cast<double>(plane);
    }
    return out;
}

void dense_forward(const Tensor& w, const Tensor& b, const std::vector<double>& in,
                   std::vector<double>& out) {
    const std::size_t out_n = w.dims[0];
    const std::size_t in_n = w.dims[1];
    out.resize(out_n);
    for (std::size_t j = 0; j < out_n; ++j) {
        double acc = b.v[j];
        const double* wr = w.v.data() + j * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            acc += wr[i] * in[i];
        }
        out[j] = acc;
    }
}

void dense_backward(const Tensor& w, const std::vector<double>& in, const std::vector<double>& d_out,
                    std::vector<double>* d_in, Tensor& d_w, Tensor& d_b) {
    const std::size_t out_n = w.dims[0];
    const std::size_t in_n = w.dims[1];
    if (d_in) {
        d_in->assign(in_n, 0.0);
    }
    for (std::size_t j = 0; j < out_n; ++j) {
        const double g = d_out[j];
        d_b.v[j] += g;
        const double* wr = w.v.data() + j * in_n;
        double* dwr = d_w.v.data() + j * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            dwr[i] += g * in[i];
            if (d_in) {
                (*d_in)[i] += g * wr[i];
            }
        }
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ModelOutput apply_head_activations(const std::vector<double>& z, HeadMode mode) {
    ModelOutput out;
    out.mode = mode;
    if (mode == HeadMode::encoded) {
        out.s_theta = std::tanh(z[0]);
        out.c_theta = std::tanh(z[1]);
        out.s_phi = std::tanh(z[2]);
        out.sigma = sigmoid(z[3]);
    } else {
        out.theta = kPi * std::tanh(z[0]);
        out.phi = (kPi / 2) * std::tanh(z[1]);
        out.sigma = sigmoid(z[2]);
    }
    return out;
}

// Chain rule through the output activations: given dL/d(output fields),
// produce dL/d(pre-activation logits).
std::vector<double> head_activation_backward(const ModelOutput& out, const TrainConfig& cfg,
                                             const Sample& sample) {
    const QuantileSet q = QuantileSet::defaults();
    if (out.mode == HeadMode::encoded) {
        const EncodedGaze target = encode_gaze(sample.label);
        const GazeLossGrad g = cfg.loss == LossKind::regularized
                                   ? regularized_gaze_loss_grad(out, target, q, cfg.reg_weight)
                                   : gaze_loss_grad(out, target, q);
        return {g.d_s_theta * (1.0 - out.s_theta * out.s_theta),
                g.d_c_theta * (1.0 - out.c_theta * out.c_theta),
                g.d_s_phi * (1.0 - out.s_phi * out.s_phi),
                g.d_sigma * out.sigma * (1.0 - out.sigma)};
    }
    const RawLossGrad g = raw_gaze_loss_grad(out, sample.label, q);
    const double t0 = out.theta / kPi;
    const double t1 = out.phi / (kPi / 2);
    return {g.d_theta * kPi * (1.0 - t0 * t0), g.d_phi * (kPi / 2) * (1.0 - t1 * t1),
            g.d_sigma * out.sigma * (1.0 - out.sigma)};
}

double sample_loss(const ModelOutput& out, const TrainConfig& cfg, const Sample& sample) {
    const QuantileSet q = QuantileSet::defaults();
    if (out.mode == HeadMode::encoded) {
        const EncodedGaze target = encode_gaze(sample.label);
        return cfg.loss == LossKind::regularized
                   ? regularized_gaze_loss(out, target, q, cfg.reg_weight).total
                   : gaze_loss(out, target, q).total;
    }
    return raw_gaze_loss(out, sample.label, q).total;
}

struct ScaleTape {
    FeatureMap in0;  // 1x64x64
    FeatureMap act1, act2, act3;
    std::vector<double> gap, fc1_act;  // max_1d path
};

struct SampleTape {
    std::vector<ScaleTape> scales;
    AggregatedMap agg;                 // spatial path
    std::vector<double> gap, fc1_act;  // spatial path
    AggregatedVec aggv;                // max_1d path
    std::vector<double> logits;
    ModelOutput out;
};

void image_to_map(const Image& img, FeatureMap& fm) {
    shape_map(fm, 1, img.side(), img.side());
    std::copy(img.data().begin(), img.data().end(), fm.v.begin());
}

void backbone_stack(const BackboneParams& p, ScaleTape& t) {
    conv_forward(t.in0, p.conv1_w, p.conv1_b, t.act1);
    relu_inplace(t.act1);
    conv_forward(t.act1, p.conv2_w, p.conv2_b, t.act2);
    relu_inplace(t.act2);
    conv_forward(t.act2, p.conv3_w, p.conv3_b, t.act3);
    relu_inplace(t.act3);
}

CropSchedule effective_schedule(const CropSchedule& schedule, Aggregation agg) {
    if (agg == Aggregation::single_scale) {
        return CropSchedule({schedule.sizes().front()});
    }
    return schedule;
}

void check_input_side(const Image& img) {
    if (img.side() != kInputSide) {
        throw std::invalid_argument("backbone expects a 64x64 input image");
    }
}

void forward_tape(const std::vector<Image>& scaled, const BackboneParams& p, SampleTape& t) {
    t.scales.resize(scaled.size());
    for (std::size_t s = 0; s < scaled.size(); ++s) {
        check_input_side(scaled[s]);
        image_to_map(scaled[s], t.scales[s].in0);
        backbone_stack(p, t.scales[s]);
    }
    if (p.spec.aggregation == Aggregation::max_1d) {
        std::vector<std::vector<double>> feats(scaled.size());
        for (std::size_t s = 0; s < scaled.size(); ++s) {
            t.scales[s].gap = gap_forward(t.scales[s].act3);
            dense_forward(p.fc1_w, p.fc1_b, t.scales[s].gap, t.scales[s].fc1_act);
            for (double& x : t.scales[s].fc1_act) {
                x = x > 0.0 ? x : 0.0;
            }
            feats[s] = t.scales[s].fc1_act;
        }
        t.aggv = aggregate_max_1d(feats);
        dense_forward(p.fc2_w, p.fc2_b, t.aggv.vec, t.logits);
    } else {
        std::vector<FeatureMap> maps(scaled.size());
        for (std::size_t s = 0; s < scaled.size(); ++s) {
            maps[s] = t.scales[s].act3;
        }
        t.agg = aggregate_spatial_max(maps);
        t.gap = gap_forward(t.agg.map);
        dense_forward(p.fc1_w, p.fc1_b, t.gap, t.fc1_act);
        for (double& x : t.fc1_act) {
            x = x > 0.0 ? x : 0.0;
        }
        dense_forward(p.fc2_w, p.fc2_b, t.fc1_act, t.logits);
    }
    t.out = apply_head_activations(t.logits, p.spec.head_mode);
}

void backward_tape(const SampleTape& t, const BackboneParams& p, const std::vector<double>& d_logits,
                   BackboneParams& g) {
    const std::size_t n_scales = t.scales.size();
    std::vector<FeatureMap> d_act3(n_scales);
    std::vector<bool> touched(n_scales, false);
    for (std::size_t s = 0; s < n_scales; ++s) {
        shape_map(d_act3[s], t.scales[s].act3.channels, t.scales[s].act3.height, t.scales[s].act3.width);
        std::fill(d_act3[s].v.begin(), d_act3[s].v.end(), 0.0);
    }

    if (p.spec.aggregation == Aggregation::max_1d) {
        std::vector<double> d_aggv;
        dense_backward(p.fc2_w, t.aggv.vec, d_logits, &d_aggv, g.fc2_w, g.fc2_b);
        // Each vector element routes to the scale that won its max.
        std::vector<std::vector<double>> d_fc1(n_scales);
        for (std::size_t s = 0; s < n_scales; ++s) {
            d_fc1[s].assign(d_aggv.size(), 0.0);
        }
        for (std::size_t i = 0; i < d_aggv.size(); ++i) {
            const std::size_t s = t.aggv.argmax[i];
            d_fc1[s][i] = d_aggv[i];
            touched[s] = true;
        }
        for (std::size_t s = 0; s < n_scales; ++s) {
            if (!touched[s]) {
                continue;
            }
            for (std::size_t i = 0; i < d_fc1[s].size(); ++i) {
                if (t.scales[s].fc1_act[i] <= 0.0) {
                    d_fc1[s][i] = 0.0;
                }
            }
            std::vector<double> d_gap;
            dense_backward(p.fc1_w, t.scales[s].gap, d_fc1[s], &d_gap, g.fc1_w, g.fc1_b);
            const FeatureMap& act3 = t.scales[s].act3;
            const double inv = 1.0 / (act3.height * act3.width);
            for (int c = 0; c < act3.channels; ++c) {
                for (int y = 0; y < act3.height; ++y) {
                    for (int x = 0; x < act3.width; ++x) {
                        d_act3[s].at(c, y, x) = d_gap[c] * inv;
                    }
                }
            }
        }
    } else {
        std::vector<double> d_fc1_act;
        dense_backward(p.fc2_w, t.fc1_act, d_logits, &d_fc1_act, g.fc2_w, g.fc2_b);
        for (std::size_t i = 0; i < d_fc1_act.size(); ++i) {
            if (t.fc1_act[i] <= 0.0) {
                d_fc1_act[i] = 0.0;
            }
        }
        std::vector<double> d_gap;
        dense_backward(p.fc1_w, t.gap, d_fc1_act, &d_gap, g.fc1_w, g.fc1_b);
        // GAP spreads uniformly, then each element's gradient goes to the
        // scale that won the spatial max.
        const FeatureMap& agg = t.agg.map;
        const double inv = 1.0 / (agg.height * agg.width);
        const std::size_t plane = static_cast<std::size_t>(agg.height) * agg.width;
        for (std::size_t e = 0; e < agg.v.size(); ++e) {
            const std::size_t s = t.agg.argmax[e];
            d_act3[s].v[e] = d_gap[e / plane] * inv;
            touched[s] = true;
        }
    }

    FeatureMap d_act2, d_act1;
    for (std::size_t s = 0; s < n_scales; ++s) {
        if (!touched[s]) {
            continue;  // a scale that never won any element gets zero gradient
        }
        const ScaleTape& st = t.scales[s];
        relu_mask(st.act3, d_act3[s]);
        shape_map(d_act2, st.act2.channels, st.act2.height, st.act2.width);
        std::fill(d_act2.v.begin(), d_act2.v.end(), 0.0);
        conv_backward(st.act2, p.conv3_w, d_act3[s], &d_act2, g.conv3_w, g.conv3_b);
        relu_mask(st.act2, d_act2);
        shape_map(d_act1, st.act1.channels, st.act1.height, st.act1.width);
        std::fill(d_act1.v.begin(), d_act1.v.end(), 0.0);
        conv_backward(st.act1, p.conv2_w, d_act2, &d_act1, g.conv2_w, g.conv2_b);
        relu_mask(st.act1, d_act1);
        conv_backward(st.in0, p.conv1_w, d_act1, nullptr, g.conv1_w, g.conv1_b);
    }
}

std::vector<Image> expand_for_forward(const Image& img, const CropSchedule& schedule, Aggregation agg) {
    return expand_static(img, effective_schedule(schedule, agg));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> d) : dims(std::move(d)) { v.assign(dim_product(dims), 0.0); }

BackboneParams BackboneParams::zeros(const ModelSpec& spec) {
    BackboneParams p;
    p.spec = spec;
    const std::size_t hidden = static_cast<std::size_t>(spec.hidden_width());
    const std::size_t out = static_cast<std::size_t>(spec.output_width());
    p.conv1_w = Tensor({8, 1, 3, 3});
    p.conv1_b = Tensor({8});
    p.conv2_w = Tensor({16, 8, 3, 3});
    p.conv2_b = Tensor({16});
    p.conv3_w = Tensor({16, 16, 3, 3});
    p.conv3_b = Tensor({16});
    p.fc1_w = Tensor({hidden, 16});
    p.fc1_b = Tensor({hidden});
    p.fc2_w = Tensor({out, hidden});
    p.fc2_b = Tensor({out});
    return p;
}

BackboneParams BackboneParams::init(const ModelSpec& spec, std::uint64_t seed) {
    BackboneParams p = zeros(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& [name, tensor] : p.named_tensors()) {
        if (name.ends_with("/w")) {
            const std::size_t fan_in =
                tensor->dims.size() == 4 ? tensor->dims[1] * tensor->dims[2] * tensor->dims[3]
                                         : tensor->dims[1];
            const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (double& x : tensor->v) {
                x = stddev * gauss(rng);
            }
        }
    }
    return p;
}

std::vector<std::pair<std::string, Tensor*>> BackboneParams::named_tensors() {
    return {{"conv1/w", &conv1_w}, {"conv1/b", &conv1_b}, {"conv2/w", &conv2_w}, {"conv2/b", &conv2_b},
            {"conv3/w", &conv3_w}, {"conv3/b", &conv3_b}, {"fc1/w", &fc1_w},     {"fc1/b", &fc1_b},
            {"fc2/w", &fc2_w},     {"fc2/b", &fc2_b}};
}

std::vector<std::pair<std::string, const Tensor*>> BackboneParams::named_tensors() const {
    auto mutable_list = const_cast<BackboneParams*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mutable_list.size());
    for (auto& [name, tensor] : mutable_list) {
        out.emplace_back(name, tensor);
    }
    return out;
}

FeatureMap backbone_forward(const Image& img, const BackboneParams& params) {
    check_input_side(img);
    ScaleTape t;
    image_to_map(img, t.in0);
    backbone_stack(params, t);
    return t.act3;
}

AggregatedMap aggregate_spatial_max(const std::vector<FeatureMap>& maps) {
    if (maps.empty()) {
        throw std::invalid_argument("aggregate_spatial_max: empty map list");
    }
    for (const FeatureMap& m : maps) {
        if (!m.same_shape(maps.front())) {
            throw std::invalid_argument("aggregate_spatial_max: shape mismatch");
        }
    }
    AggregatedMap out;
    out.map = maps.front();
    out.argmax.assign(out.map.v.size(), 0);
    for (std::size_t s = 1; s < maps.size(); ++s) {
        for (std::size_t e = 0; e < out.map.v.size(); ++e) {
            if (maps[s].v[e] > out.map.v[e]) {
                out.map.v[e] = maps[s].v[e];
                out.argmax[e] = static_cast<std::uint16_t>(s);
            }
        }
    }
    return out;
}

AggregatedVec aggregate_max_1d(const std::vector<std::vector<double>>& features) {
    if (features.empty()) {
        throw std::invalid_argument("aggregate_max_1d: empty feature list");
    }
    for (const auto& f : features) {
        if (f.size() != features.front().size()) {
            throw std::invalid_argument("aggregate_max_1d: length mismatch");
        }
    }
    AggregatedVec out;
    out.vec = features.front();
    out.argmax.assign(out.vec.size(), 0);
    for (std::size_t s = 1; s < features.size(); ++s) {
        for (std::size_t e = 0; e < out.vec.size(); ++e) {
            if (features[s][e] > out.vec[e]) {
                out.vec[e] = features[s][e];
                out.argmax[e] = static_cast<std::uint16_t>(s);
            }
        }
    }
    return out;
}

ModelOutput head_forward(const FeatureMap& fm, const BackboneParams& params) {
    if (fm.channels != 16 || fm.height != 8 || fm.width != 8) {
        throw std::invalid_argument("head_forward: expected a 16x8x8 feature map");
    }
    std::vector<double> gap = gap_forward(fm);
    std::vector<double> fc1;
    dense_forward(params.fc1_w, params.fc1_b, gap, fc1);
    for (double& x : fc1) {
        x = x > 0.0 ? x : 0.0;
    }
    std::vector<double> logits;
    dense_forward(params.fc2_w, params.fc2_b, fc1, logits);
    return apply_head_activations(logits, params.spec.head_mode);
}

ModelOutput forward_msa(const Image& img, const CropSchedule& schedule, const BackboneParams& params) {
    SampleTape tape;
    forward_tape(expand_for_forward(img, schedule, params.spec.aggregation), params, tape);
    return tape.out;
}

ModelOutput forward_sequence(const std::vector<Image>& frames, const CropSchedule& schedule,
                             const SequenceScheduleKind& kind, const BackboneParams& params) {
    const std::size_t expect = 2 * (schedule.size() - 1) + 1;
    if (frames.size() != expect) {
        throw std::invalid_argument("forward_sequence: expected " + std::to_string(expect) + " frames");
    }
    const std::vector<int> sizes = sequence_crop_sizes(schedule, kind);
    std::vector<Image> scaled;
    scaled.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        scaled.push_back(resize_bilinear(center_crop(frames[i], sizes[i]), frames[i].side()));
    }
    SampleTape tape;
    forward_tape(scaled, params, tape);
    return tape.out;
}

double batch_loss(const std::vector<const Sample*>& batch, const CropSchedule& schedule,
                  const BackboneParams& params, const TrainConfig& config) {
    if (batch.empty()) {
        throw std::invalid_argument("batch_loss: empty batch");
    }
    SampleTape tape;
    double total = 0.0;
    for (const Sample* s : batch) {
        forward_tape(expand_for_forward(s->image, schedule, params.spec.aggregation), params, tape);
        total += sample_loss(tape.out, config, *s);
    }
    return total / static_cast<double>(batch.size());
}

BatchGrad backward(const std::vector<const Sample*>& batch, const CropSchedule& schedule,
                   const BackboneParams& params, const TrainConfig& config) {
    if (batch.empty()) {
        throw std::invalid_argument("backward: empty batch");
    }
    BatchGrad out;
    out.grads = BackboneParams::zeros(params.spec);
    SampleTape tape;
    for (const Sample* s : batch) {
        forward_tape(expand_for_forward(s->image, schedule, params.spec.aggregation), params, tape);
        out.loss += sample_loss(tape.out, config, *s);
        const std::vector<double> d_logits = head_activation_backward(tape.out, config, *s);
        backward_tape(tape, params, d_logits, out.grads);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& [name, tensor] : out.grads.named_tensors()) {
        for (double& x : tensor->v) {
            x *= inv;
        }
    }
    return out;
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed ^ (salt + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double validation_error(const std::vector<const Sample*>& val, const CropSchedule& schedule,
                        const BackboneParams& params) {
    if (val.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const Decoder decoder = params.spec.head_mode == HeadMode::encoded ? Decoder::wsc : Decoder::raw;
    double total = 0.0;
    for (const Sample* s : val) {
        const ModelOutput out = forward_msa(s->image, schedule, params);
        total += angular_error(predict_angles(out, decoder), s->label);
    }
    return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& config) {
    if (dataset.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (config.learning_rate <= 0.0 || config.batch_size < 1 || config.epochs < 1) {
        throw std::invalid_argument("train: invalid learning_rate/batch_size/epochs");
    }
    if (!(config.val_fraction >= 0.0 && config.val_fraction < 1.0)) {
        throw std::invalid_argument("train: val_fraction outside [0, 1)");
    }
    if (config.head_mode == HeadMode::raw && config.loss == LossKind::regularized) {
        throw std::invalid_argument("train: the circle regularizer needs the encoded head");
    }
    const CropSchedule schedule = effective_schedule(CropSchedule(config.crops), config.aggregation);

    // Deterministic validation split, then epoch shuffling of the remainder.
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::mt19937_64 split_rng(mix(config.seed, 0x5EED5EEDULL));
    std::shuffle(order.begin(), order.end(), split_rng);
    const std::size_t n_val = static_cast<std::size_t>(config.val_fraction * dataset.size());
    std::vector<const Sample*> val, train_set;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? val : train_set).push_back(&dataset[order[i]]);
    }
    if (train_set.empty()) {
        throw std::invalid_argument("train: validation split leaves no training data");
    }

    TrainResult result;
    result.params = BackboneParams::init(config.model_spec(), config.seed);
    BackboneParams m = BackboneParams::zeros(result.params.spec);
    BackboneParams v = BackboneParams::zeros(result.params.spec);

    std::mt19937_64 epoch_rng(mix(config.seed, 0xE70C45ULL));
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(train_set.begin(), train_set.end(), epoch_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_set.size(); start += config.batch_size) {
            const std::size_t stop = std::min(train_set.size(), start + config.batch_size);
            const std::vector<const Sample*> batch(train_set.begin() + start, train_set.begin() + stop);
            BatchGrad bg = backward(batch, schedule, result.params, config);
            if (!std::isfinite(bg.loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_loss += bg.loss * static_cast<double>(batch.size());
            ++step;
            const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
            auto pt = result.params.named_tensors();
            auto gt = bg.grads.named_tensors();
            auto mt = m.named_tensors();
            auto vt = v.named_tensors();
            for (std::size_t k = 0; k < pt.size(); ++k) {
                double* pv = pt[k].second->v.data();
                const double* gv = gt[k].second->v.data();
                double* mv = mt[k].second->v.data();
                double* vv = vt[k].second->v.data();
                const std::size_t n = pt[k].second->size();
                for (std::size_t i = 0; i < n; ++i) {
                    mv[i] = config.adam_beta1 * mv[i] + (1.0 - config.adam_beta1) * gv[i];
                    vv[i] = config.adam_beta2 * vv[i] + (1.0 - config.adam_beta2) * gv[i] * gv[i];
                    pv[i] -= config.learning_rate * (mv[i] / bc1) / (std::sqrt(vv[i] / bc2) + config.adam_eps);
                }
            }
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
        stats.val_error_rad = validation_error(val, schedule, result.params);
        result.history.push_back(stats);
    }
    return result;
}

GazeAngles predict_angles(const ModelOutput& out, Decoder decoder) {
    if (out.mode == HeadMode::raw) {
        if (decoder != Decoder::raw) {
            throw std::invalid_argument("predict_angles: raw head requires the raw decoder");
        }
        return GazeAngles(out.theta, out.phi);
    }
    if (decoder == Decoder::raw) {
        throw std::invalid_argument("predict_angles: encoded head cannot use the raw decoder");
    }
    const EncodedGaze e(out.s_theta, out.c_theta, out.s_phi);
    const double yaw = decoder == Decoder::wsc ? decode_yaw_wsc(e).yaw : decode_yaw_sc(e);
    // The branch average stays in [-pi, pi] in exact arithmetic; clamp the
    // last-ulp rounding drift so angle construction cannot reject it.
    return GazeAngles(std::clamp(yaw, -kPi, kPi), decode_pitch(e));
}

}  // namespace gazekit
