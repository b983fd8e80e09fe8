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

#include "pulsebench/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/rng.hpp"

using namespace pulsebench;

namespace {

template <typename Fn>
std::string thrown_code(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "<no throw>";
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "pulsebench_ut" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

model::ModelConfig tiny_config(int fusion_stage) {
    model::ModelConfig cfg;
    cfg.t = 8;
    cfg.c = 3;
    cfg.h = 16;
    cfg.w = 16;
    cfg.fusion_stage = fusion_stage;
    cfg.num_identities = 3;
    return cfg;
}

template <typename T>
bool same_bits(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(T)) == 0;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    REQUIRE(a.numel() == b.numel());
    double m = 0;
    for (std::size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

/// Linear probe of the two network outputs, used by the finite-difference
/// gradient comparison.
double probe(const TensorD& clip, const model::ModelParams<double>& p,
             const model::ModelConfig& cfg, const TensorD& db, const TensorD& dl) {
    const auto r = model::forward(clip, p, cfg);
    double s = 0;
    for (std::size_t i = 0; i < r.bvp.numel(); ++i) s += db[i] * r.bvp[i];
    for (std::size_t i = 0; i < r.id_logits.numel(); ++i) s += dl[i] * r.id_logits[i];
    return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("identity extractor emits the documented shapes at full resolution") {
    model::ModelConfig cfg;
    cfg.num_identities = 4;
    Rng rng(11);
    const auto params = model::init_params<float>(cfg, rng);
    TensorF map({3, 128, 128});
    map.fill_uniform(rng, -1.0, 1.0);
    const auto [features, avg_map] = model::extract_identity(map, params.extractor2d);
    CHECK(features.shape() == std::vector<int>{64, 16, 16});
    CHECK(avg_map.shape() == std::vector<int>{1, 16, 16});
}

TEST_CASE("zero input with zero biases gives a zero contour map") {
    Rng rng(12);
    auto params = model::init_params<float>(tiny_config(3), rng);
    const TensorF zero({3, 16, 16});
    const auto [features, avg_map] = model::extract_identity(zero, params.extractor2d);
    for (std::size_t i = 0; i < features.numel(); ++i) CHECK(features[i] == 0.0f);
    for (std::size_t i = 0; i < avg_map.numel(); ++i) CHECK(avg_map[i] == 0.0f);
}

TEST_CASE("contour map is the channel mean of the feature stack") {
    Rng rng(13);
    auto params = model::init_params<double>(tiny_config(3), rng);
    TensorD map({3, 16, 16});
    map.fill_normal(rng, 0.0, 1.0);
    const auto [features, avg_map] = model::extract_identity(map, params.extractor2d);
    const int c = features.dim(0), h = features.dim(1), w = features.dim(2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int ci = 0; ci < c; ++ci) s += features.at3(ci, y, x);
            CHECK(std::abs(avg_map.at3(0, y, x) - s / c) < 1e-6);
        }
}

TEST_CASE("classifier arity matches the identity count and zero features map to the bias") {
    model::ModelConfig cfg = tiny_config(3);
    cfg.num_identities = 8;
    Rng rng(14);
    auto params = model::init_params<float>(cfg, rng);
    params.id_w.fill_normal(rng, 0.0, 1.0);
    const TensorF zero_features({cfg.stage_channels[2], 2, 2});
    const auto logits = model::classify_identity(zero_features, params);
    REQUIRE(logits.shape() == std::vector<int>{8});
    for (std::size_t i = 0; i < logits.numel(); ++i) CHECK(logits[i] == params.id_b[i]);
}

TEST_CASE("stage outputs walk down the spatial ladder and keep time intact") {
    model::ModelConfig cfg;
    Rng rng(15);
    const auto params = model::init_params<float>(cfg, rng);

    TensorF x({3, 4, 128, 128});
    x.fill_uniform(rng, -1.0, 1.0);
    const auto m1 = model::rppg_stage(x, params.stage1);
    CHECK(m1.shape() == std::vector<int>{16, 4, 64, 64});
    const auto m2 = model::rppg_stage(m1, params.stage2);
    CHECK(m2.shape() == std::vector<int>{32, 4, 32, 32});
    const auto m3 = model::rppg_stage(m2, params.stage3);
    CHECK(m3.shape() == std::vector<int>{64, 4, 16, 16});

    const auto tiny = model::init_params<float>(tiny_config(3), rng);
    TensorF long_clip({3, 64, 16, 16});
    long_clip.fill_uniform(rng, -1.0, 1.0);
    CHECK(model::rppg_stage(long_clip, tiny.stage1).dim(1) == 64);
}

TEST_CASE("combiner with alpha 0 and identity mix returns the feature map bitwise") {
    Rng rng(16);
    model::CtfcParams<double> cp;
    cp.alpha = 0.0;
    cp.beta = 1.0;
    cp.conv_i = TensorD({8, 1});
    cp.conv_i.fill_normal(rng, 0.0, 1.0);
    cp.conv_r = TensorD({8, 8});
    for (int i = 0; i < 8; ++i) cp.conv_r.at2(i, i) = 1.0;

    TensorD fm({8, 6, 10, 12});
    fm.fill_normal(rng, 0.0, 1.0);
    TensorD avg({1, 5, 7});
    avg.fill_normal(rng, 0.0, 1.0);
    const auto out = model::ctfc_fuse(avg, fm, cp);
    CHECK(same_bits(out, fm));
}

TEST_CASE("combiner with beta 0 broadcasts a constant contour map") {
    model::CtfcParams<double> cp;
    cp.alpha = 1.0;
    cp.beta = 0.0;
    cp.conv_i = TensorD::full({4, 1}, 1.0);
    cp.conv_r = TensorD({4, 4});
    Rng rng(17);
    cp.conv_r.fill_normal(rng, 0.0, 1.0);

    TensorD fm({4, 3, 6, 6});
    fm.fill_normal(rng, 0.0, 1.0);
    const double v = 0.8125;

    const TensorD same_size = TensorD::full({1, 6, 6}, v);
    const auto exact = model::ctfc_fuse(same_size, fm, cp);
    for (std::size_t i = 0; i < exact.numel(); ++i) CHECK(exact[i] == v);

    const TensorD resized = TensorD::full({1, 3, 4}, v);
    const auto near = model::ctfc_fuse(resized, fm, cp);
    for (std::size_t i = 0; i < near.numel(); ++i) CHECK(std::abs(near[i] - v) < 1e-6);
}

TEST_CASE("combiner output matches the feature map's full shape") {
    Rng rng(18);
    model::CtfcParams<float> cp;
    cp.alpha = 0.7f;
    cp.beta = 1.2f;
    cp.conv_i = TensorF({64, 1});
    cp.conv_r = TensorF({64, 64});
    cp.conv_i.fill_normal(rng, 0.0, 0.3);
    cp.conv_r.fill_normal(rng, 0.0, 0.3);
    TensorF fm({64, 64, 16, 16});
    fm.fill_normal(rng, 0.0, 1.0);
    TensorF avg({1, 16, 16});
    avg.fill_normal(rng, 0.0, 1.0);
    CHECK(model::ctfc_fuse(avg, fm, cp).shape() == std::vector<int>{64, 64, 16, 16});
}

TEST_CASE("combiner is jointly linear in both inputs") {
    Rng rng(19);
    model::CtfcParams<double> cp;
    cp.alpha = 1.3;
    cp.beta = -0.4;
    cp.conv_i = TensorD({6, 1});
    cp.conv_r = TensorD({6, 6});
    cp.conv_i.fill_normal(rng, 0.0, 1.0);
    cp.conv_r.fill_normal(rng, 0.0, 1.0);

    TensorD fm({6, 4, 8, 8});
    fm.fill_normal(rng, 0.0, 1.0);
    TensorD avg({1, 4, 4});
    avg.fill_normal(rng, 0.0, 1.0);

    const double a = 2.75;
    TensorD fm_a = fm;
    fm_a.scale(a);
    TensorD avg_a = avg;
    avg_a.scale(a);

    auto scaled = model::ctfc_fuse(avg_a, fm_a, cp);
    auto base = model::ctfc_fuse(avg, fm, cp);
    base.scale(a);
    CHECK(max_abs_diff(scaled, base) < 1e-6);
}

TEST_CASE("combiner commutes with spatial permutations at matched resolution") {
    Rng rng(20);
    const int c = 5, tn = 3, h = 6, w = 7;
    model::CtfcParams<double> cp;
    cp.alpha = 0.9;
    cp.beta = 1.1;
    cp.conv_i = TensorD({c, 1});
    cp.conv_r = TensorD({c, c});
    cp.conv_i.fill_normal(rng, 0.0, 1.0);
    cp.conv_r.fill_normal(rng, 0.0, 1.0);

    TensorD fm({c, tn, h, w});
    fm.fill_normal(rng, 0.0, 1.0);
    TensorD avg({1, h, w});
    avg.fill_normal(rng, 0.0, 1.0);

    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<std::size_t> perm(hw);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);

    TensorD avg_p({1, h, w});
    for (std::size_t i = 0; i < hw; ++i) avg_p[i] = avg[perm[i]];
    TensorD fm_p({c, tn, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int t = 0; t < tn; ++t) {
            const std::size_t base = (static_cast<std::size_t>(ci) * tn + t) * hw;
            for (std::size_t i = 0; i < hw; ++i) fm_p[base + i] = fm[base + perm[i]];
        }

    const auto out = model::ctfc_fuse(avg, fm, cp);
    const auto out_p = model::ctfc_fuse(avg_p, fm_p, cp);
    for (int ci = 0; ci < c; ++ci)
        for (int t = 0; t < tn; ++t) {
            const std::size_t base = (static_cast<std::size_t>(ci) * tn + t) * hw;
            for (std::size_t i = 0; i < hw; ++i) CHECK(out_p[base + i] == out[base + perm[i]]);
        }
}

TEST_CASE("forward emits a full-length trace and K logits for every fusion choice") {
    Rng rng(21);
    for (int stage : {model::kFusionNone, 1, 2, 3}) {
        const auto cfg = tiny_config(stage);
        const auto params = model::init_params<float>(cfg, rng);
        TensorF clip({cfg.t, cfg.c, cfg.h, cfg.w});
        clip.fill_uniform(rng, -1.0, 1.0);
        const auto out = model::forward(clip, params, cfg);
        CHECK(out.bvp.shape() == std::vector<int>{cfg.t});
        CHECK(out.id_logits.shape() == std::vector<int>{cfg.num_identities});
        CHECK(out.fused_map.shape() ==
              std::vector<int>{cfg.stage_channels[2], cfg.t, cfg.h / 8, cfg.w / 8});
    }
}

TEST_CASE("forward is deterministic") {
    const auto cfg = tiny_config(3);
    Rng rng(22);
    const auto params = model::init_params<float>(cfg, rng);
    TensorF clip({cfg.t, cfg.c, cfg.h, cfg.w});
    clip.fill_normal(rng, 0.0, 1.0);
    const auto a = model::forward(clip, params, cfg);
    const auto b = model::forward(clip, params, cfg);
    CHECK(same_bits(a.bvp, b.bvp));
    CHECK(same_bits(a.id_logits, b.id_logits));
    CHECK(same_bits(a.fused_map, b.fused_map));
}

TEST_CASE("without fusion the two branches are fully isolated") {
    const auto cfg = tiny_config(model::kFusionNone);
    Rng rng(23);
    const auto base = model::init_params<float>(cfg, rng);
    TensorF clip({cfg.t, cfg.c, cfg.h, cfg.w});
    clip.fill_normal(rng, 0.0, 1.0);
    const auto ref = model::forward(clip, base, cfg);

    auto rppg_touched = base;
    rppg_touched.stage2.w1.fill_normal(rng, 0.0, 0.5);
    rppg_touched.bvp_w.fill_normal(rng, 0.0, 0.5);
    rppg_touched.ctfc.alpha = 9.0f;
    const auto r1 = model::forward(clip, rppg_touched, cfg);
    CHECK(same_bits(r1.id_logits, ref.id_logits));
    CHECK_FALSE(same_bits(r1.bvp, ref.bvp));

    auto id_touched = base;
    id_touched.extractor2d.w2.fill_normal(rng, 0.0, 0.5);
    id_touched.id_w.fill_normal(rng, 0.0, 0.5);
    const auto r2 = model::forward(clip, id_touched, cfg);
    CHECK(same_bits(r2.bvp, ref.bvp));
    CHECK_FALSE(same_bits(r2.id_logits, ref.id_logits));
}

TEST_CASE("with fusion the contour map steers the trace output") {
    const auto cfg = tiny_config(3);
    Rng rng(24);
    const auto base = model::init_params<float>(cfg, rng);
    TensorF clip({cfg.t, cfg.c, cfg.h, cfg.w});
    clip.fill_normal(rng, 0.0, 1.0);
    const auto ref = model::forward(clip, base, cfg);

    auto id_touched = base;
    id_touched.extractor2d.w1.fill_normal(rng, 0.0, 0.5);
    const auto r = model::forward(clip, id_touched, cfg);
    CHECK_FALSE(same_bits(r.bvp, ref.bvp));
}

TEST_CASE("analytic parameter gradients match central finite differences") {
    for (int stage : {3, 1}) {
        const auto cfg = tiny_config(stage);
        Rng rng(25 + stage);
        auto params = model::init_params<double>(cfg, rng);
        TensorD clip({cfg.t, cfg.c, cfg.h, cfg.w});
        clip.fill_normal(rng, 0.0, 1.0);
        TensorD db({cfg.t});
        db.fill_normal(rng, 0.0, 1.0);
        TensorD dl({cfg.num_identities});
        dl.fill_normal(rng, 0.0, 1.0);

        model::ForwardCache<double> cache;
        model::forward(clip, params, cfg, &cache);
        auto grads = model::zero_params<double>(cfg);
        model::backward(cache, params, cfg, db, dl, grads);

        auto refs = model::param_refs(params);
        const auto gref = model::param_refs(grads);
        const int samples = stage == 3 ? 4 : 2;
        const double step = 1e-5;
        for (std::size_t a = 0; a < refs.size(); ++a) {
            for (int s = 0; s < samples; ++s) {
                const std::size_t i = rng.uniform_index(refs[a].numel);
                const double saved = refs[a].data[i];
                refs[a].data[i] = saved + step;
                const double up = probe(clip, params, cfg, db, dl);
                refs[a].data[i] = saved - step;
                const double down = probe(clip, params, cfg, db, dl);
                refs[a].data[i] = saved;
                const double fd = (up - down) / (2.0 * step);
                const double an = gref[a].data[i];
                if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
                const double rel = std::abs(fd - an) / std::max(std::abs(fd), std::abs(an));
                CHECK_MESSAGE(rel < 1e-3, refs[a].name, "[", i, "] fd=", fd, " an=", an);
            }
        }
    }
}

TEST_CASE("checkpoints round trip parameters and configuration exactly") {
    const auto dir = temp_dir("model_ckpt");
    model::ModelConfig cfg = tiny_config(2);
    cfg.tcu_upsample_factor = 2;
    cfg.temperature = 0.125;
    cfg.band.lo = 0.6;
    cfg.band.hi = 3.9;
    Rng rng(26);
    const auto params = model::init_params<float>(cfg, rng);

    const auto path = dir / "net.ckpt";
    model::save_checkpoint(path, params, cfg);
    const auto ck = model::load_checkpoint(path);

    CHECK(ck.config.t == cfg.t);
    CHECK(ck.config.h == cfg.h);
    CHECK(ck.config.stage_channels == cfg.stage_channels);
    CHECK(ck.config.fusion_stage == cfg.fusion_stage);
    CHECK(ck.config.tcu_upsample_factor == cfg.tcu_upsample_factor);
    CHECK(ck.config.num_identities == cfg.num_identities);
    CHECK(ck.config.temperature == cfg.temperature);
    CHECK(ck.config.band.lo == cfg.band.lo);
    CHECK(ck.config.band.hi == cfg.band.hi);

    const auto a = model::param_refs(params);
    const auto b = model::param_refs(ck.params);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(std::memcmp(a[i].data, b[i].data, a[i].numel * sizeof(float)) == 0);
    }
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto dir = temp_dir("model_ckpt_bad");
    CHECK(thrown_code([&] { model::load_checkpoint(dir / "missing.ckpt"); }) ==
          "model.BadCheckpoint");

    {
        std::ofstream out(dir / "not_a_ckpt.bin", std::ios::binary);
        out << "PNG rather than a checkpoint";
    }
    CHECK(thrown_code([&] { model::load_checkpoint(dir / "not_a_ckpt.bin"); }) ==
          "model.BadCheckpoint");

    const auto cfg = tiny_config(3);
    Rng rng(27);
    const auto params = model::init_params<float>(cfg, rng);
    model::save_checkpoint(dir / "full.ckpt", params, cfg);
    std::ifstream in(dir / "full.ckpt", std::ios::binary);
    std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
    bytes.resize(bytes.size() / 2);
    {
        std::ofstream out(dir / "truncated.ckpt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK(thrown_code([&] { model::load_checkpoint(dir / "truncated.ckpt"); }) ==
          "model.BadCheckpoint");
}

TEST_CASE("forward rejects mismatched inputs and unallocated parameters") {
    const auto cfg = tiny_config(3);
    Rng rng(28);
    const auto params = model::init_params<float>(cfg, rng);

    TensorF wrong({cfg.t, cfg.c, cfg.h, cfg.w / 2});
    CHECK(thrown_code([&] { model::forward(wrong, params, cfg); }) == "model.ShapeError");

    model::ModelParams<float> unfitted;
    TensorF clip({cfg.t, cfg.c, cfg.h, cfg.w});
    CHECK(thrown_code([&] { model::forward(clip, unfitted, cfg); }) == "model.UnfittedParams");

    model::ModelConfig more_ids = cfg;
    more_ids.num_identities = 5;
    CHECK(thrown_code([&] { model::forward(clip, params, more_ids); }) == "model.UnfittedParams");

    model::ModelConfig bad = cfg;
    bad.h = 20;
    CHECK(thrown_code([&] { model::validate(bad); }) == "model.BadConfig");
}

}  // TEST_SUITE
