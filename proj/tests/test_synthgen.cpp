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

#include "pulsebench/synthgen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include "pulsebench/errors.hpp"

namespace fs = std::filesystem;
using namespace pulsebench;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pulsebench_ut" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

template <typename Fn>
std::string thrown_code(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "<no throw>";
}

/// Order-independent-free digest: file paths in sorted order, names and
/// contents folded through FNV-1a.
std::uint64_t tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::uint64_t hash = 1469598103934665603ULL;
    auto fold = [&hash](const char* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            hash ^= static_cast<unsigned char>(data[i]);
            hash *= 1099511628211ULL;
        }
    };
    for (const fs::path& file : files) {
        const std::string rel = fs::relative(file, root).generic_string();
        fold(rel.data(), rel.size());
        std::ifstream in(file, std::ios::binary);
        const std::string bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        fold(bytes.data(), bytes.size());
    }
    return hash;
}

double inside_green_mean(const image_io::ImageU8& frame,
                         const synthgen::EllipseContour& e) {
    const int h = frame.dim(1);
    const int w = frame.dim(2);
    const double c = std::cos(e.rotation);
    const double s = std::sin(e.rotation);
    double sum = 0;
    std::size_t count = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = static_cast<double>(x) - e.cx;
            const double dy = static_cast<double>(y) - e.cy;
            const double u = (dx * c + dy * s) / e.ax;
            const double v = (-dx * s + dy * c) / e.ay;
            if (u * u + v * v <= 1.0) {
                sum += frame.at3(1, y, x);
                ++count;
            }
        }
    }
    REQUIRE(count > 0);
    return sum / static_cast<double>(count);
}

synthgen::SyntheticSpec small_spec() {
    synthgen::SyntheticSpec spec;
    spec.identity = 0;
    spec.hr_bpm = 75;
    spec.fps = 16;
    spec.duration_seconds = 8;
    spec.height = 32;
    spec.width = 32;
    spec.contour = synthgen::contour_for_identity(0, 32, 32);
    return spec;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("exact-bin pulse yields the exact heart rate") {
    const spectral::BvpTrace bvp = synthgen::synth_bvp(75, 30, 8, 0.4);
    CHECK(bvp.values.size() == 240);
    CHECK(spectral::estimate_hr(bvp) == 75.0);
}

TEST_CASE("off-bin pulse snaps to the nearest spectral bin") {
    // Bins for 8 s are multiples of 7.5 bpm; 72 sits between 67.5 and 75.0,
    // nearer to 75.0.
    const spectral::BvpTrace bvp = synthgen::synth_bvp(72, 30, 8, 0.0);
    const double hr = spectral::estimate_hr(bvp);
    CHECK((hr == 67.5 || hr == 75.0));
    CHECK(hr == 75.0);
}

TEST_CASE("phase shifts do not change the estimated rate") {
    for (double phase : {0.0, 0.7, 1.9, 3.1, 5.5}) {
        const spectral::BvpTrace bvp = synthgen::synth_bvp(90, 30, 8, phase);
        CHECK(spectral::estimate_hr(bvp) == 90.0);
    }
}

TEST_CASE("waveform is unit-peak normalized") {
    const spectral::BvpTrace bvp = synthgen::synth_bvp(97.5, 30, 8, 1.1);
    double peak = 0;
    for (double v : bvp.values) peak = std::max(peak, std::abs(v));
    CHECK(peak == 1.0);
}

TEST_CASE("noiseless skin mean tracks the pulse to rounding precision") {
    synthgen::SyntheticSpec spec = small_spec();
    const ingest::Record rec = synthgen::generate_record(spec, 11);
    REQUIRE(rec.frames.size() == 128);
    REQUIRE(rec.bvp_values.size() == 128);

    for (std::size_t t = 0; t < rec.frames.size(); t += 17) {
        const double expected =
            spec.skin_base_rgb[1] + spec.modulation_amp[1] * rec.bvp_values[t];
        const double mean = inside_green_mean(rec.frames[t], spec.contour);
        CHECK(std::abs(mean - expected) <= 0.5);
    }
}

TEST_CASE("skin-mean trace recovers the spec heart rate") {
    synthgen::SyntheticSpec spec = small_spec();
    spec.hr_bpm = 97.5;
    const ingest::Record rec = synthgen::generate_record(spec, 3);

    spectral::BvpTrace trace;
    trace.fs = spec.fps;
    for (const auto& frame : rec.frames) {
        trace.values.push_back(inside_green_mean(frame, spec.contour));
    }
    CHECK(spectral::estimate_hr(trace) == doctest::Approx(97.5).epsilon(1e-12));
}

TEST_CASE("identities get distinct contours that fit the frame") {
    std::set<std::pair<long long, long long>> seen;
    for (int id = 0; id < 32; ++id) {
        for (int res : {32, 128}) {
            const synthgen::EllipseContour e =
                synthgen::contour_for_identity(id, res, res);
            synthgen::SyntheticSpec spec;
            spec.identity = id;
            spec.fps = 4;
            spec.duration_seconds = 1;
            spec.height = res;
            spec.width = res;
            spec.contour = e;
            CHECK_NOTHROW(synthgen::generate_record(spec, 1));
        }
        const synthgen::EllipseContour e =
            synthgen::contour_for_identity(id, 128, 128);
        seen.insert({std::llround(e.cx * 1e6), std::llround(e.ax * 1e6)});
    }
    CHECK(seen.size() == 32);
}

TEST_CASE("oversized contour raises ContourOutOfFrame") {
    synthgen::SyntheticSpec spec = small_spec();
    spec.contour.ax = 30;
    spec.contour.ay = 30;
    CHECK(thrown_code([&] { synthgen::generate_record(spec, 1); }) ==
          "synthgen.ContourOutOfFrame");
}

TEST_CASE("identical spec and seed give identical records") {
    synthgen::SyntheticSpec spec = small_spec();
    spec.noise_std = 2.0;
    spec.illum_drift_amp = 1.0;
    const ingest::Record a = synthgen::generate_record(spec, 42);
    const ingest::Record b = synthgen::generate_record(spec, 42);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
        REQUIRE(std::memcmp(a.frames[t].data(), b.frames[t].data(),
                            a.frames[t].numel()) == 0);
    }
    CHECK(a.bvp_values == b.bvp_values);

    const ingest::Record c = synthgen::generate_record(spec, 43);
    bool any_differ = false;
    for (std::size_t t = 0; t < a.frames.size() && !any_differ; ++t) {
        any_differ = std::memcmp(a.frames[t].data(), c.frames[t].data(),
                                 a.frames[t].numel()) != 0;
    }
    CHECK(any_differ);
}

TEST_CASE("written records load back exactly") {
    const fs::path dir = temp_dir("synthgen_roundtrip") / "rec";
    synthgen::SyntheticSpec spec = small_spec();
    spec.hr_bpm = 90;
    spec.noise_std = 1.5;
    const ingest::Record rec = synthgen::generate_record(spec, 5);
    synthgen::write_record(rec, dir);

    const ingest::Record back = ingest::load_record(dir);
    CHECK(back.fps == rec.fps);
    CHECK(back.identity == rec.identity);
    CHECK(back.hr_bpm == rec.hr_bpm);
    REQUIRE(back.bvp_values.size() == rec.bvp_values.size());
    for (std::size_t i = 0; i < rec.bvp_values.size(); ++i) {
        CHECK(back.bvp_values[i] == rec.bvp_values[i]);
    }
    REQUIRE(back.frames.size() == rec.frames.size());
    for (std::size_t t = 0; t < rec.frames.size(); ++t) {
        REQUIRE(std::memcmp(back.frames[t].data(), rec.frames[t].data(),
                            rec.frames[t].numel()) == 0);
    }
}

TEST_CASE("generated datasets are indexed, on-bin and deterministic") {
    synthgen::DatasetSpec spec;
    spec.num_identities = 2;
    spec.records_per_identity = 2;
    spec.hr_lo = 60;
    spec.hr_hi = 120;
    spec.fps = 16;
    spec.duration_seconds = 2;
    spec.height = 16;
    spec.width = 16;

    const fs::path root_a = temp_dir("synthgen_ds_a");
    const ingest::DatasetIndex index = synthgen::generate_dataset(spec, 7, root_a);
    CHECK(index.num_identities == 2);
    REQUIRE(index.records.size() == 4);

    for (const auto& desc : index.records) {
        const ingest::Record rec = ingest::load_record(desc.path);
        // 2 s records put bins at multiples of 30 bpm.
        CHECK(rec.hr_bpm >= 60.0);
        CHECK(rec.hr_bpm <= 120.0);
        CHECK(std::abs(rec.hr_bpm / 30.0 - std::round(rec.hr_bpm / 30.0)) <
              1e-12);
    }

    const fs::path root_b = temp_dir("synthgen_ds_b");
    synthgen::generate_dataset(spec, 7, root_b);
    CHECK(tree_digest(root_a) == tree_digest(root_b));

    const fs::path root_c = temp_dir("synthgen_ds_c");
    synthgen::generate_dataset(spec, 8, root_c);
    CHECK(tree_digest(root_a) != tree_digest(root_c));
}

}  // TEST_SUITE
