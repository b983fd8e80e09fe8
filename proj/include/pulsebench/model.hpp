/* Copyright 2026 The pulsebench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/nn.hpp"
#include "pulsebench/rng.hpp"
#include "pulsebench/spectral.hpp"
#include "pulsebench/tcu.hpp"
#include "pulsebench/tensor.hpp"

// The two-branch pulse network. The identity branch runs a 2D extractor over
// the temporally compressed clip and classifies the subject; the rPPG branch
// runs three 3D stages over the full clip and regresses the pulse trace. The
// cross-task combiner injects the identity branch's contour map into one
// chosen rPPG stage, replacing that stage's output downstream.

namespace pulsebench::model {

inline constexpr int kFusionNone = 0;

struct ModelConfig {
    int t = 64;
    int c = 3;
    int h = 128;
    int w = 128;
    std::array<int, 3> stage_channels{16, 32, 64};
    int fusion_stage = 3;  // 1..3, or kFusionNone to bypass the combiner
    int tcu_upsample_factor = 1;
    int num_identities = 2;
    double temperature = 0.05;
    spectral::HrBand band{};
};

inline void validate(const ModelConfig& cfg) {
    require(cfg.t >= 2 && cfg.c >= 1, "model.BadConfig", "clip shape needs T >= 2 and C >= 1");
    require(cfg.h >= 8 && cfg.w >= 8 && cfg.h % 8 == 0 && cfg.w % 8 == 0, "model.BadConfig",
            "spatial dims must be positive multiples of 8");
    for (int ch : cfg.stage_channels)
        require(ch >= 1, "model.BadConfig", "stage channel widths must be positive");
    require(cfg.fusion_stage >= kFusionNone && cfg.fusion_stage <= 3, "model.BadConfig",
            "fusion stage must be 1, 2, 3, or none");
    require(cfg.tcu_upsample_factor >= 1, "model.BadConfig", "upsample factor must be >= 1");
    require(cfg.num_identities >= 2, "model.BadConfig", "need at least two identities");
    require(cfg.temperature > 0, "model.BadConfig", "temperature must be positive");
    require(cfg.band.lo > 0 && cfg.band.hi > cfg.band.lo, "model.BadConfig",
            "frequency band must satisfy 0 < lo < hi");
}

/// Channel width of the feature map the combiner operates on.
inline int ctfc_channels(const ModelConfig& cfg) {
    const int k = cfg.fusion_stage == kFusionNone ? 3 : cfg.fusion_stage;
    return cfg.stage_channels[static_cast<std::size_t>(k - 1)];
}

template <typename T>
struct StageParams {
    Tensor<T> w1, b1;  // Cout x Cin x 3 x 3 x 3 plus per-channel bias
    Tensor<T> w2, b2;
};

template <typename T>
struct Extractor2dParams {
    Tensor<T> w1, b1;  // Cout x Cin x 3 x 3 plus per-channel bias
    Tensor<T> w2, b2;
    Tensor<T> w3, b3;
    Tensor<T> w4, b4;
};

template <typename T>
struct CtfcParams {
    T alpha = T(1);
    T beta = T(1);
    Tensor<T> conv_i;  // C x 1 pointwise lift of the replicated contour map
    Tensor<T> conv_r;  // C x C pointwise mix of the rPPG feature map
};

template <typename T>
struct ModelParams {
    StageParams<T> stage1, stage2, stage3;
    Extractor2dParams<T> extractor2d;
    Tensor<T> id_w, id_b;  // K x C_feat affine classifier
    Tensor<T> bvp_w;       // 1 x C_final channel collapse
    CtfcParams<T> ctfc;
    T s1 = 0, s2 = 0, s3 = 0;  // log sigma^2 per task
};

/// Named view of one parameter array; scalars appear with shape {1}.
template <typename T>
struct ParamRef {
    std::string name;
    T* data;
    std::vector<int> shape;
    std::size_t numel;
};

template <typename T>
std::vector<ParamRef<T>> param_refs(ModelParams<T>& p) {
    std::vector<ParamRef<T>> refs;
    auto tensor = [&refs](const char* name, Tensor<T>& t) {
        refs.push_back({name, t.data(), t.shape(), t.numel()});
    };
    auto scalar = [&refs](const char* name, T& v) {
        refs.push_back({name, &v, {1}, 1});
    };
    tensor("stage1.w1", p.stage1.w1);
    tensor("stage1.b1", p.stage1.b1);
    tensor("stage1.w2", p.stage1.w2);
    tensor("stage1.b2", p.stage1.b2);
    tensor("stage2.w1", p.stage2.w1);
    tensor("stage2.b1", p.stage2.b1);
    tensor("stage2.w2", p.stage2.w2);
    tensor("stage2.b2", p.stage2.b2);
    tensor("stage3.w1", p.stage3.w1);
    tensor("stage3.b1", p.stage3.b1);
    tensor("stage3.w2", p.stage3.w2);
    tensor("stage3.b2", p.stage3.b2);
    tensor("extractor2d.w1", p.extractor2d.w1);
    tensor("extractor2d.b1", p.extractor2d.b1);
    tensor("extractor2d.w2", p.extractor2d.w2);
    tensor("extractor2d.b2", p.extractor2d.b2);
    tensor("extractor2d.w3", p.extractor2d.w3);
    tensor("extractor2d.b3", p.extractor2d.b3);
    tensor("extractor2d.w4", p.extractor2d.w4);
    tensor("extractor2d.b4", p.extractor2d.b4);
    tensor("id_head.w", p.id_w);
    tensor("id_head.b", p.id_b);
    tensor("bvp_head.w", p.bvp_w);
    tensor("ctfc.conv_i", p.ctfc.conv_i);
    tensor("ctfc.conv_r", p.ctfc.conv_r);
    scalar("ctfc.alpha", p.ctfc.alpha);
    scalar("ctfc.beta", p.ctfc.beta);
    scalar("uncertainty.s1", p.s1);
    scalar("uncertainty.s2", p.s2);
    scalar("uncertainty.s3", p.s3);
    return refs;
}

template <typename T>
std::vector<ParamRef<T>> param_refs(const ModelParams<T>& p) {
    return param_refs(const_cast<ModelParams<T>&>(p));
}

/// All arrays allocated to the configured shapes, every value zero. Doubles
/// as the gradient container for backward.
template <typename T>
ModelParams<T> zero_params(const ModelConfig& cfg) {
    validate(cfg);
    const int c0 = cfg.c;
    const int c1 = cfg.stage_channels[0], c2 = cfg.stage_channels[1], c3 = cfg.stage_channels[2];
    ModelParams<T> p;
    p.stage1.w1 = Tensor<T>({c1, c0, 3, 3, 3});
    p.stage1.b1 = Tensor<T>({c1});
    p.stage1.w2 = Tensor<T>({c1, c1, 3, 3, 3});
    p.stage1.b2 = Tensor<T>({c1});
    p.stage2.w1 = Tensor<T>({c2, c1, 3, 3, 3});
    p.stage2.b1 = Tensor<T>({c2});
    p.stage2.w2 = Tensor<T>({c2, c2, 3, 3, 3});
    p.stage2.b2 = Tensor<T>({c2});
    p.stage3.w1 = Tensor<T>({c3, c2, 3, 3, 3});
    p.stage3.b1 = Tensor<T>({c3});
    p.stage3.w2 = Tensor<T>({c3, c3, 3, 3, 3});
    p.stage3.b2 = Tensor<T>({c3});
    p.extractor2d.w1 = Tensor<T>({c1, c0, 3, 3});
    p.extractor2d.b1 = Tensor<T>({c1});
    p.extractor2d.w2 = Tensor<T>({c2, c1, 3, 3});
    p.extractor2d.b2 = Tensor<T>({c2});
    p.extractor2d.w3 = Tensor<T>({c3, c2, 3, 3});
    p.extractor2d.b3 = Tensor<T>({c3});
    p.extractor2d.w4 = Tensor<T>({c3, c3, 3, 3});
    p.extractor2d.b4 = Tensor<T>({c3});
    p.id_w = Tensor<T>({cfg.num_identities, c3});
    p.id_b = Tensor<T>({cfg.num_identities});
    p.bvp_w = Tensor<T>({1, c3});
    const int cf = ctfc_channels(cfg);
    p.ctfc.conv_i = Tensor<T>({cf, 1});
    p.ctfc.conv_r = Tensor<T>({cf, cf});
    p.ctfc.alpha = 0;
    p.ctfc.beta = 0;
    p.s1 = 0;
    p.s2 = 0;
    p.s3 = 0;
    return p;
}

/// Fresh trainable parameters. Convolutions draw from a fan-in-scaled normal,
/// the classifier starts at zero (exactly uniform softmax), the combiner
/// starts near the unfused network (alpha=beta=1, conv_r near identity), and
/// the hr uncertainty starts wide so the frequency task cannot swamp the
/// waveform task before the trace takes shape.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, Rng& rng) {
    ModelParams<T> p = zero_params<T>(cfg);
    auto fan_in_normal = [&rng](Tensor<T>& w) {
        const double fan_in = static_cast<double>(w.numel() / static_cast<std::size_t>(w.dim(0)));
        w.fill_normal(rng, 0.0, std::sqrt(1.0 / fan_in));
    };
    fan_in_normal(p.stage1.w1);
    fan_in_normal(p.stage1.w2);
    fan_in_normal(p.stage2.w1);
    fan_in_normal(p.stage2.w2);
    fan_in_normal(p.stage3.w1);
    fan_in_normal(p.stage3.w2);
    fan_in_normal(p.extractor2d.w1);
    fan_in_normal(p.extractor2d.w2);
    fan_in_normal(p.extractor2d.w3);
    fan_in_normal(p.extractor2d.w4);
    fan_in_normal(p.bvp_w);
    p.ctfc.conv_i.fill_normal(rng, 0.0, 0.1);
    p.ctfc.conv_r.fill_normal(rng, 0.0, 0.01);
    for (int i = 0; i < p.ctfc.conv_r.dim(0); ++i) p.ctfc.conv_r.at2(i, i) += T(1);
    p.ctfc.alpha = T(1);
    p.ctfc.beta = T(1);
    p.s1 = 0;
    p.s2 = static_cast<T>(2.0 * std::log(30.0));
    p.s3 = 0;
    return p;
}

namespace detail {

/// T x C x H x W clip rearranged to the channel-major layout the 3D stack
/// consumes.
template <typename T>
Tensor<T> tchw_to_cthw(const Tensor<T>& clip) {
    const int tn = clip.dim(0), c = clip.dim(1), h = clip.dim(2), w = clip.dim(3);
    Tensor<T> out({c, tn, h, w});
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int t = 0; t < tn; ++t)
        for (int ci = 0; ci < c; ++ci)
            std::copy_n(clip.data() + (static_cast<std::size_t>(t) * c + ci) * hw, hw,
                        out.data() + (static_cast<std::size_t>(ci) * tn + t) * hw);
    return out;
}

template <typename T>
struct StageCache {
    Tensor<T> in;   // stage input, Cin x T x H x W
    Tensor<T> a1;   // softsign(conv1)
    Tensor<T> a2;   // softsign(conv2)
    Tensor<T> out;  // 1x2x2 max pooled
    std::vector<unsigned char> argmax;
};

template <typename T>
void run_stage(const Tensor<T>& in, const StageParams<T>& sp, StageCache<T>& cc) {
    cc.in = in;
    cc.a1 = nn::softsign_forward(nn::conv3d(in, sp.w1, sp.b1));
    cc.a2 = nn::softsign_forward(nn::conv3d(cc.a1, sp.w2, sp.b2));
    cc.out = nn::maxpool_spatial(cc.a2, cc.argmax);
}

template <typename T>
Tensor<T> stage_backward(const StageCache<T>& cc, const StageParams<T>& sp, const Tensor<T>& dout,
                         StageParams<T>& g, bool need_din) {
    Tensor<T> da2 = nn::maxpool_spatial_backward(dout, cc.argmax, cc.a2.dim(2), cc.a2.dim(3));
    Tensor<T> dz2 = nn::softsign_backward(da2, cc.a2);
    Tensor<T> da1;
    nn::conv3d_backward(cc.a1, sp.w2, dz2, &da1, g.w2, g.b2);
    Tensor<T> dz1 = nn::softsign_backward(da1, cc.a1);
    Tensor<T> din;
    nn::conv3d_backward(cc.in, sp.w1, dz1, need_din ? &din : nullptr, g.w1, g.b1);
    return din;
}

template <typename T>
struct Extract2dCache {
    Tensor<T> in;
    Tensor<T> a1, p1, a2, p2, a3, p3;
    Tensor<T> features;  // C_feat x H/8 x W/8
    Tensor<T> avg_map;   // 1 x H/8 x W/8 channel mean
    std::vector<unsigned char> m1, m2, m3;
};

template <typename T>
void extract_identity_cached(const Tensor<T>& map2d, const Extractor2dParams<T>& ep,
                             Extract2dCache<T>& cc) {
    require(map2d.rank() == 3, "model.ShapeError", "identity input must be C x H x W");
    require(map2d.dim(1) % 8 == 0 && map2d.dim(2) % 8 == 0, "model.ShapeError",
            "identity input spatial dims must be divisible by 8");
    cc.in = map2d;
    cc.a1 = nn::softsign_forward(nn::conv2d(map2d, ep.w1, ep.b1));
    cc.p1 = nn::maxpool2d(cc.a1, cc.m1);
    cc.a2 = nn::softsign_forward(nn::conv2d(cc.p1, ep.w2, ep.b2));
    cc.p2 = nn::maxpool2d(cc.a2, cc.m2);
    cc.a3 = nn::softsign_forward(nn::conv2d(cc.p2, ep.w3, ep.b3));
    cc.p3 = nn::maxpool2d(cc.a3, cc.m3);
    cc.features = nn::softsign_forward(nn::conv2d(cc.p3, ep.w4, ep.b4));

    const int c = cc.features.dim(0), h = cc.features.dim(1), w = cc.features.dim(2);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    cc.avg_map = Tensor<T>({1, h, w});
    for (int ci = 0; ci < c; ++ci) {
        const T* src = cc.features.data() + ci * hw;
        for (std::size_t i = 0; i < hw; ++i) cc.avg_map[i] += src[i];
    }
    cc.avg_map.scale(T(1) / static_cast<T>(c));
}

/// Pushes the feature-stack gradient back through the four blocks. The input
/// map carries no trainable producer, so its gradient is dropped.
template <typename T>
void extract2d_backward(const Extract2dCache<T>& cc, const Extractor2dParams<T>& ep,
                        const Tensor<T>& d_features, Extractor2dParams<T>& g) {
    Tensor<T> dz4 = nn::softsign_backward(d_features, cc.features);
    Tensor<T> dp3;
    nn::conv2d_backward(cc.p3, ep.w4, dz4, &dp3, g.w4, g.b4);
    Tensor<T> da3 = nn::maxpool2d_backward(dp3, cc.m3, cc.a3.dim(1), cc.a3.dim(2));
    Tensor<T> dz3 = nn::softsign_backward(da3, cc.a3);
    Tensor<T> dp2;
    nn::conv2d_backward(cc.p2, ep.w3, dz3, &dp2, g.w3, g.b3);
    Tensor<T> da2 = nn::maxpool2d_backward(dp2, cc.m2, cc.a2.dim(1), cc.a2.dim(2));
    Tensor<T> dz2 = nn::softsign_backward(da2, cc.a2);
    Tensor<T> dp1;
    nn::conv2d_backward(cc.p1, ep.w2, dz2, &dp1, g.w2, g.b2);
    Tensor<T> da1 = nn::maxpool2d_backward(dp1, cc.m1, cc.a1.dim(1), cc.a1.dim(2));
    Tensor<T> dz1 = nn::softsign_backward(da1, cc.a1);
    nn::conv2d_backward(cc.in, ep.w1, dz1, static_cast<Tensor<T>*>(nullptr), g.w1, g.b1);
}

template <typename T>
struct CtfcCache {
    Tensor<T> fm_r;     // combiner input feature map
    Tensor<T> resized;  // contour map at the feature map's resolution
    Tensor<T> stack;    // resized map replicated along time, 1 x T x H x W
    Tensor<T> lift;     // conv_i(stack)
    Tensor<T> mix;      // conv_r(fm_r)
    int hi = 0, wi = 0;
};

template <typename T>
Tensor<T> ctfc_fuse_cached(const Tensor<T>& avg_map, const Tensor<T>& fm_r,
                           const CtfcParams<T>& cp, CtfcCache<T>& cc) {
    require(avg_map.rank() == 3 && avg_map.dim(0) == 1, "model.ShapeError",
            "contour map must be 1 x H x W");
    require(fm_r.rank() == 4, "model.ShapeError", "feature map must be C x T x H x W");
    const int c = fm_r.dim(0), tr = fm_r.dim(1), hr = fm_r.dim(2), wr = fm_r.dim(3);
    require(cp.conv_i.rank() == 2 && cp.conv_i.dim(0) == c && cp.conv_i.dim(1) == 1 &&
                cp.conv_r.rank() == 2 && cp.conv_r.dim(0) == c && cp.conv_r.dim(1) == c,
            "model.ShapeError", "combiner kernels do not match the feature channel count");
    cc.hi = avg_map.dim(1);
    cc.wi = avg_map.dim(2);
    cc.fm_r = fm_r;
    cc.resized = nn::bilinear_resize(avg_map, hr, wr);
    cc.stack = Tensor<T>({1, tr, hr, wr});
    const std::size_t hw = static_cast<std::size_t>(hr) * wr;
    for (int t = 0; t < tr; ++t)
        std::copy_n(cc.resized.data(), hw, cc.stack.data() + t * hw);
    cc.lift = nn::pointwise_conv(cc.stack, cp.conv_i);
    cc.mix = nn::pointwise_conv(fm_r, cp.conv_r);
    Tensor<T> out = cc.lift;
    out.scale(cp.alpha);
    out.add_scaled(cc.mix, cp.beta);
    return out;
}

/// Returns the gradient on fm_r and writes the gradient on the pre-resize
/// contour map into d_avg.
template <typename T>
Tensor<T> ctfc_backward(const CtfcCache<T>& cc, const CtfcParams<T>& cp, const Tensor<T>& dout,
                        CtfcParams<T>& g, Tensor<T>& d_avg) {
    T da = 0, db = 0;
    for (std::size_t i = 0; i < dout.numel(); ++i) {
        da += dout[i] * cc.lift[i];
        db += dout[i] * cc.mix[i];
    }
    g.alpha += da;
    g.beta += db;

    Tensor<T> d_mix = dout;
    d_mix.scale(cp.beta);
    Tensor<T> d_fm;
    nn::pointwise_conv_backward(cc.fm_r, cp.conv_r, d_mix, &d_fm, g.conv_r);

    Tensor<T> d_lift = dout;
    d_lift.scale(cp.alpha);
    Tensor<T> d_stack;
    nn::pointwise_conv_backward(cc.stack, cp.conv_i, d_lift, &d_stack, g.conv_i);

    const int tr = cc.stack.dim(1), hr = cc.stack.dim(2), wr = cc.stack.dim(3);
    const std::size_t hw = static_cast<std::size_t>(hr) * wr;
    Tensor<T> d_resized({1, hr, wr});
    for (int t = 0; t < tr; ++t) {
        const T* src = d_stack.data() + t * hw;
        for (std::size_t i = 0; i < hw; ++i) d_resized[i] += src[i];
    }
    d_avg = nn::bilinear_resize_backward(d_resized, cc.hi, cc.wi);
    return d_fm;
}

}  // namespace detail

/// 2D extractor over the compressed clip: four softsign conv blocks, the
/// first three each halving resolution. Returns the feature stack and its
/// channel mean (the contour map).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> extract_identity(const Tensor<T>& map2d,
                                                 const Extractor2dParams<T>& params) {
    detail::Extract2dCache<T> cc;
    detail::extract_identity_cached(map2d, params, cc);
    return {std::move(cc.features), std::move(cc.avg_map)};
}

/// Global average pooling over the feature stack, then an affine map to K
/// identity logits.
template <typename T>
Tensor<T> classify_identity(const Tensor<T>& features, const ModelParams<T>& params) {
    require(features.rank() == 3, "model.ShapeError", "features must be C x H x W");
    require(params.id_w.rank() == 2 && params.id_w.dim(0) >= 2, "model.ShapeError",
            "classifier needs at least two identities");
    Tensor<T> gap = nn::global_mean_2d(features);
    return nn::linear(gap, params.id_w, params.id_b);
}

/// One rPPG stage: two softsign 3x3x3 convolutions, then 1x2x2 spatial max
/// pooling. Time is preserved, spatial dims halve.
template <typename T>
Tensor<T> rppg_stage(const Tensor<T>& x, const StageParams<T>& weights) {
    require(x.rank() == 4, "model.ShapeError", "stage input must be C x T x H x W");
    detail::StageCache<T> cc;
    detail::run_stage(x, weights, cc);
    return std::move(cc.out);
}

/// Resizes the contour map to the feature map's grid, replicates it along
/// time, lifts it to C channels with conv_i, mixes fm_r with conv_r, and
/// returns alpha * lift + beta * mix.
template <typename T>
Tensor<T> ctfc_fuse(const Tensor<T>& avg_map, const Tensor<T>& fm_r, const CtfcParams<T>& params) {
    detail::CtfcCache<T> cc;
    return detail::ctfc_fuse_cached(avg_map, fm_r, params, cc);
}

template <typename T>
struct ForwardCache {
    Tensor<T> x;  // clip in channel-major layout
    detail::Extract2dCache<T> id;
    Tensor<T> gap;
    Tensor<T> logits;
    detail::StageCache<T> s1, s2, s3;
    detail::CtfcCache<T> fuse;
    Tensor<T> final_map;  // stage-3 output after any fusion splice
    Tensor<T> pooled;     // C x T spatial mean
    Tensor<T> bvp;        // 1 x T channel collapse
};

template <typename T>
struct ForwardResult {
    Tensor<T> bvp;        // length T
    Tensor<T> id_logits;  // length K
    Tensor<T> fused_map;  // C x T x H/8 x W/8
};

template <typename T>
ForwardResult<T> forward(const Tensor<T>& clip, const ModelParams<T>& params,
                         const ModelConfig& cfg, ForwardCache<T>* cache = nullptr) {
    validate(cfg);
    require(clip.rank() == 4 && clip.dim(0) == cfg.t && clip.dim(1) == cfg.c &&
                clip.dim(2) == cfg.h && clip.dim(3) == cfg.w,
            "model.ShapeError", "clip does not match the configured input shape");
    require(!params.stage1.w1.empty() && !params.id_w.empty() && !params.bvp_w.empty(),
            "model.UnfittedParams", "parameters are not allocated");
    require(params.id_w.dim(0) == cfg.num_identities, "model.UnfittedParams",
            "classifier arity does not match the configuration");

    ForwardCache<T> local;
    ForwardCache<T>& cc = cache ? *cache : local;

    cc.x = detail::tchw_to_cthw(clip);

    Tensor<T> map2d = tcu::compress(clip);
    if (cfg.tcu_upsample_factor > 1) map2d = tcu::upsample(map2d, cfg.tcu_upsample_factor);
    detail::extract_identity_cached(map2d, params.extractor2d, cc.id);
    cc.gap = nn::global_mean_2d(cc.id.features);
    cc.logits = nn::linear(cc.gap, params.id_w, params.id_b);

    detail::run_stage(cc.x, params.stage1, cc.s1);
    Tensor<T> m = cc.s1.out;
    if (cfg.fusion_stage == 1) m = detail::ctfc_fuse_cached(cc.id.avg_map, m, params.ctfc, cc.fuse);
    detail::run_stage(m, params.stage2, cc.s2);
    m = cc.s2.out;
    if (cfg.fusion_stage == 2) m = detail::ctfc_fuse_cached(cc.id.avg_map, m, params.ctfc, cc.fuse);
    detail::run_stage(m, params.stage3, cc.s3);
    m = cc.s3.out;
    if (cfg.fusion_stage == 3) m = detail::ctfc_fuse_cached(cc.id.avg_map, m, params.ctfc, cc.fuse);
    cc.final_map = std::move(m);
    cc.pooled = nn::global_spatial_mean(cc.final_map);
    cc.bvp = nn::pointwise_conv(cc.pooled, params.bvp_w);

    ForwardResult<T> out;
    out.bvp = Tensor<T>({cfg.t});
    std::copy_n(cc.bvp.data(), static_cast<std::size_t>(cfg.t), out.bvp.data());
    out.id_logits = cc.logits;
    out.fused_map = cc.final_map;
    return out;
}

/// Accumulates parameter gradients for the given output gradients into
/// grads (allocate with zero_params). d_bvp has length T, d_logits length K.
template <typename T>
void backward(const ForwardCache<T>& cc, const ModelParams<T>& params, const ModelConfig& cfg,
              const Tensor<T>& d_bvp, const Tensor<T>& d_logits, ModelParams<T>& grads) {
    require(d_bvp.numel() == static_cast<std::size_t>(cfg.t), "model.ShapeError",
            "bvp gradient length mismatch");
    require(d_logits.numel() == static_cast<std::size_t>(cfg.num_identities), "model.ShapeError",
            "logit gradient length mismatch");

    Tensor<T> db({1, cfg.t});
    std::copy_n(d_bvp.data(), static_cast<std::size_t>(cfg.t), db.data());
    Tensor<T> d_pooled;
    nn::pointwise_conv_backward(cc.pooled, params.bvp_w, db, &d_pooled, grads.bvp_w);
    Tensor<T> d_map =
        nn::global_spatial_mean_backward(d_pooled, cc.final_map.dim(2), cc.final_map.dim(3));

    Tensor<T> d_avg;
    if (cfg.fusion_stage == 3)
        d_map = detail::ctfc_backward(cc.fuse, params.ctfc, d_map, grads.ctfc, d_avg);
    d_map = detail::stage_backward(cc.s3, params.stage3, d_map, grads.stage3, true);
    if (cfg.fusion_stage == 2)
        d_map = detail::ctfc_backward(cc.fuse, params.ctfc, d_map, grads.ctfc, d_avg);
    d_map = detail::stage_backward(cc.s2, params.stage2, d_map, grads.stage2, true);
    if (cfg.fusion_stage == 1)
        d_map = detail::ctfc_backward(cc.fuse, params.ctfc, d_map, grads.ctfc, d_avg);
    detail::stage_backward(cc.s1, params.stage1, d_map, grads.stage1, false);

    Tensor<T> d_gap;
    nn::linear_backward(cc.gap, params.id_w, d_logits, &d_gap, grads.id_w, grads.id_b);
    Tensor<T> d_features =
        nn::global_mean_2d_backward(d_gap, cc.id.features.dim(1), cc.id.features.dim(2));
    if (!d_avg.empty()) {
        const int c = cc.id.features.dim(0);
        const std::size_t hw = d_avg.numel();
        const T inv = T(1) / static_cast<T>(c);
        for (int ci = 0; ci < c; ++ci) {
            T* dst = d_features.data() + ci * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] += d_avg[i] * inv;
        }
    }
    detail::extract2d_backward(cc.id, params.extractor2d, d_features, grads.extractor2d);
}

// ---------------------------------------------------------------------------
// checkpoint container

struct Checkpoint {
    ModelConfig config;
    ModelParams<float> params;
};

/// Writes a self-describing binary checkpoint: magic, format version, a JSON
/// directory of config plus array names/shapes/dtypes/offsets, then the raw
/// little-endian array payload.
void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const ModelConfig& config);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pulsebench::model
