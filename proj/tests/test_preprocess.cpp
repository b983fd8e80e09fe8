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

#include "pulsebench/preprocess.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/rng.hpp"
#include "pulsebench/synthgen.hpp"

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

ingest::Record synth_record(double duration, double fps, double hr = 75,
                            int res = 16) {
    synthgen::SyntheticSpec spec;
    spec.hr_bpm = hr;
    spec.fps = fps;
    spec.duration_seconds = duration;
    spec.height = res;
    spec.width = res;
    spec.contour = synthgen::contour_for_identity(0, res, res);
    return synthgen::generate_record(spec, 21);
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("constant clips standardize to zero") {
    Tensor<unsigned char> raw({4, 3, 4, 4});
    for (std::size_t i = 0; i < raw.numel(); ++i) raw[i] = 128;
    const TensorF out = preprocess::standardize_clip(raw);
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 0.0f);
}

TEST_CASE("two-point channels standardize to exactly plus and minus one") {
    Tensor<unsigned char> raw({2, 3, 4, 4});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 4; ++x) {
                raw.at4(0, c, y, x) = 0;
                raw.at4(1, c, y, x) = 255;
            }
        }
    }
    const TensorF out = preprocess::standardize_clip(raw);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 4; ++x) {
                CHECK(out.at4(0, c, y, x) == -1.0f);
                CHECK(out.at4(1, c, y, x) == 1.0f);
            }
        }
    }
}

TEST_CASE("standardized random clips have zero mean and unit deviation") {
    Rng rng(5);
    Tensor<unsigned char> raw({8, 3, 8, 8});
    for (std::size_t i = 0; i < raw.numel(); ++i) {
        raw[i] = static_cast<unsigned char>(rng.uniform_index(256));
    }
    const TensorF out = preprocess::standardize_clip(raw);

    const std::size_t per_channel = 8 * 8 * 8;
    for (int c = 0; c < 3; ++c) {
        double sum = 0, sum_sq = 0;
        for (int t = 0; t < 8; ++t) {
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    const double v = out.at4(t, c, y, x);
                    sum += v;
                    sum_sq += v * v;
                }
            }
        }
        const double mean = sum / static_cast<double>(per_channel);
        const double var = sum_sq / static_cast<double>(per_channel) - mean * mean;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
    }
}

TEST_CASE("standardization is invariant to per-channel affine maps") {
    Rng rng(17);
    Tensor<unsigned char> raw({6, 3, 6, 6});
    Tensor<unsigned char> mapped(raw.shape());
    for (std::size_t i = 0; i < raw.numel(); ++i) {
        // Values in [20, 100] keep 2v + 10 inside the byte range exactly.
        raw[i] = static_cast<unsigned char>(20 + rng.uniform_index(81));
        mapped[i] = static_cast<unsigned char>(2 * raw[i] + 10);
    }
    const TensorF a = preprocess::standardize_clip(raw);
    const TensorF b = preprocess::standardize_clip(mapped);
    for (std::size_t i = 0; i < a.numel(); ++i) {
        CHECK(std::abs(a[i] - b[i]) < 1e-6);
    }
}

TEST_CASE("standardization is idempotent") {
    Rng rng(23);
    Tensor<unsigned char> raw({6, 3, 6, 6});
    for (std::size_t i = 0; i < raw.numel(); ++i) {
        raw[i] = static_cast<unsigned char>(rng.uniform_index(256));
    }
    const TensorF once = preprocess::standardize_clip(raw);
    const TensorF twice = preprocess::standardize_clip(once);
    for (std::size_t i = 0; i < once.numel(); ++i) {
        CHECK(std::abs(once[i] - twice[i]) < 1e-6);
    }
}

TEST_CASE("window counts follow start-stride-length arithmetic") {
    const ingest::Record rec = synth_record(8.0, 30.0);
    REQUIRE(rec.frames.size() == 240);

    CHECK(preprocess::window_clips(rec, 64, 64).size() == 3);
    CHECK(preprocess::window_clips(rec, 64, 32).size() == 6);

    const ingest::Record short_rec = synth_record(4.0, 16.0);
    REQUIRE(short_rec.frames.size() == 64);
    CHECK(preprocess::window_clips(short_rec, 64, 1).size() == 1);

    CHECK(thrown_code([&] { preprocess::window_clips(short_rec, 128, 1); }) ==
          "preprocess.ClipTooLong");
}

TEST_CASE("windows carry aligned labels and a plausible segment rate") {
    const ingest::Record rec = synth_record(8.0, 30.0, 97.5);
    const auto clips = preprocess::window_clips(rec, 64, 64);
    REQUIRE(clips.size() == 3);
    for (std::size_t k = 0; k < clips.size(); ++k) {
        const auto& clip = clips[k];
        CHECK(clip.data.shape() == std::vector<int>{64, 3, 16, 16});
        REQUIRE(clip.bvp.size() == 64);
        CHECK(clip.fps == 30.0);
        for (int i = 0; i < 64; ++i) {
            CHECK(clip.bvp[i] == rec.bvp_values[k * 64 + i]);
        }
        CHECK(clip.hr_bpm > 30.0);
        CHECK(clip.hr_bpm < 252.0);
        // 64 samples at 30 Hz put bins 28.125 bpm apart; the window HR can
        // sit at most one bin from the record HR.
        CHECK(std::abs(clip.hr_bpm - 97.5) <= 28.125);
    }
}

TEST_CASE("stride-T windows tile the record prefix exactly") {
    const ingest::Record rec = synth_record(8.0, 16.0);
    const auto full = preprocess::stack_frames(rec.frames, 0, 96);
    for (int k = 0; k < 3; ++k) {
        const auto window = preprocess::stack_frames(rec.frames, k * 32, 32);
        CHECK(std::memcmp(window.data(), full.data() + k * window.numel(),
                          window.numel()) == 0);
    }
}

TEST_CASE("long records split into three or four equal segments") {
    const ingest::Record rec30 = synth_record(30.0, 30.0, 76);
    const auto seg30 = preprocess::segment_for_eval(rec30, 8.0);
    REQUIRE(seg30.size() == 4);
    for (const auto& s : seg30) CHECK(s.data.dim(0) == 225);

    const ingest::Record rec24 = synth_record(24.0, 30.0, 77.5);
    const auto seg24 = preprocess::segment_for_eval(rec24, 8.0);
    REQUIRE(seg24.size() == 3);
    for (const auto& s : seg24) CHECK(s.data.dim(0) == 240);
}

TEST_CASE("mid-length records take floor-count segments from the start") {
    const ingest::Record rec10 = synth_record(10.0, 30.0);
    const auto seg10 = preprocess::segment_for_eval(rec10, 8.0);
    REQUIRE(seg10.size() == 1);
    CHECK(seg10[0].data.dim(0) == 240);

    const ingest::Record rec20 = synth_record(20.0, 30.0);
    const auto seg20 = preprocess::segment_for_eval(rec20, 8.0);
    REQUIRE(seg20.size() == 2);
    CHECK(seg20[0].data.dim(0) == 240);
    CHECK(seg20[1].data.dim(0) == 240);
}

TEST_CASE("records shorter than the target become one whole segment") {
    const ingest::Record rec4 = synth_record(4.0, 30.0);
    const auto seg = preprocess::segment_for_eval(rec4, 8.0);
    REQUIRE(seg.size() == 1);
    CHECK(seg[0].data.dim(0) == 120);
}

TEST_CASE("records below two seconds are rejected") {
    const ingest::Record rec = synth_record(1.5, 30.0);
    CHECK(thrown_code([&] { preprocess::segment_for_eval(rec, 8.0); }) ==
          "preprocess.RecordTooShort");
}

TEST_CASE("labels at a different rate are resampled per frame") {
    ingest::Record rec;
    rec.fps = 30.0;
    image_io::ImageU8 frame({3, 4, 4});
    rec.frames.assign(64, frame);
    rec.bvp_fs = 60.0;
    rec.bvp_values.resize(128);
    for (std::size_t i = 0; i < rec.bvp_values.size(); ++i) {
        rec.bvp_values[i] = std::sin(0.05 * static_cast<double>(i));
    }

    const std::vector<double> frame_bvp = preprocess::bvp_at_frame_rate(rec);
    REQUIRE(frame_bvp.size() == 64);
    for (std::size_t j = 0; j < frame_bvp.size(); ++j) {
        // Shared grid points: sample j at 30 Hz is sample 2j at 60 Hz.
        CHECK(frame_bvp[j] == doctest::Approx(rec.bvp_values[2 * j]).epsilon(1e-12));
    }
}

}  // TEST_SUITE
