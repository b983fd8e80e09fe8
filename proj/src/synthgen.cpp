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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsebench/errors.hpp"
#include "pulsebench/rng.hpp"

namespace pulsebench::synthgen {

namespace fs = std::filesystem;

namespace {

constexpr double kDriftHz = 0.05;  // well below the pulse band

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

unsigned char quantize(double v) {
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    return static_cast<unsigned char>(std::llround(v));
}

/// Half extents of the rotated ellipse's axis-aligned bounding box.
void ellipse_extents(const EllipseContour& e, double* ex, double* ey) {
    const double c = std::cos(e.rotation);
    const double s = std::sin(e.rotation);
    *ex = std::sqrt(e.ax * c * e.ax * c + e.ay * s * e.ay * s);
    *ey = std::sqrt(e.ax * s * e.ax * s + e.ay * c * e.ay * c);
}

std::vector<bool> ellipse_mask(const EllipseContour& e, int h, int w) {
    const double c = std::cos(e.rotation);
    const double s = std::sin(e.rotation);
    std::vector<bool> mask(static_cast<std::size_t>(h) * w, false);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = static_cast<double>(x) - e.cx;
            const double dy = static_cast<double>(y) - e.cy;
            const double u = (dx * c + dy * s) / e.ax;
            const double v = (-dx * s + dy * c) / e.ay;
            mask[static_cast<std::size_t>(y) * w + x] = u * u + v * v <= 1.0;
        }
    }
    return mask;
}

}  // namespace

EllipseContour contour_for_identity(int identity, int height, int width) {
    Rng rng(0x636f6e746f7572ULL ^ static_cast<std::uint64_t>(identity));
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double u4 = rng.uniform();
    const double u5 = rng.uniform();

    // Ranges are sized so the rotated bounding box keeps a one-pixel border
    // for every draw at any resolution >= 16: the worst-case half extent is
    // sqrt(0.20^2 + 0.22^2) = 0.298 of the frame, the center is within 0.04
    // of it, and 0.54 + 0.298 of 16 stays below 16 - 2.
    const double h = static_cast<double>(height);
    const double w = static_cast<double>(width);
    EllipseContour e;
    e.cx = w * (0.46 + 0.08 * u1);
    e.cy = h * (0.46 + 0.08 * u2);
    e.ax = w * (0.15 + 0.05 * u3);
    e.ay = h * (0.18 + 0.04 * u4);
    e.rotation = M_PI * u5;
    return e;
}

spectral::BvpTrace synth_bvp(double hr_bpm, double fps, double duration_seconds,
                             double phase) {
    require(hr_bpm > 30 && hr_bpm < 252, "synthgen.BadSpec",
            "hr_bpm must be strictly inside (30, 252)");
    require(fps > 0 && duration_seconds > 0, "synthgen.BadSpec",
            "fps and duration must be positive");

    const double f = hr_bpm / 60.0;
    const auto n =
        static_cast<std::size_t>(std::llround(duration_seconds * fps));
    spectral::BvpTrace trace;
    trace.fs = fps;
    trace.values.resize(n);
    double peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fps;
        const double v = std::sin(2.0 * M_PI * f * t + phase) +
                         0.3 * std::sin(4.0 * M_PI * f * t + 2.0 * phase);
        trace.values[i] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0) {
        for (double& v : trace.values) v /= peak;
    }
    return trace;
}

ingest::Record generate_record(const SyntheticSpec& spec, std::uint64_t seed) {
    require(spec.height >= 8 && spec.width >= 8, "synthgen.BadSpec",
            "resolution must be at least 8 x 8");
    require(spec.noise_std >= 0 && spec.illum_drift_amp >= 0,
            "synthgen.BadSpec", "noise and drift amplitudes must be >= 0");

    const double h = static_cast<double>(spec.height);
    const double w = static_cast<double>(spec.width);
    double ex = 0, ey = 0;
    ellipse_extents(spec.contour, &ex, &ey);
    require(spec.contour.ax >= 1 && spec.contour.ay >= 1 &&
                spec.contour.cx - ex >= 1.0 && spec.contour.cx + ex <= w - 2.0 &&
                spec.contour.cy - ey >= 1.0 && spec.contour.cy + ey <= h - 2.0,
            "synthgen.ContourOutOfFrame",
            "ellipse does not fit the frame with a one-pixel border");

    Rng rng(seed);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const spectral::BvpTrace bvp =
        synth_bvp(spec.hr_bpm, spec.fps, spec.duration_seconds, phase);
    const std::size_t n_frames = bvp.values.size();
    require(n_frames >= 2, "synthgen.BadSpec", "record needs at least 2 frames");

    const std::vector<bool> mask =
        ellipse_mask(spec.contour, spec.height, spec.width);

    ingest::Record record;
    record.fps = spec.fps;
    record.bvp_values = bvp.values;
    record.bvp_fs = spec.fps;
    record.hr_bpm = spec.hr_bpm;
    record.identity = spec.identity;
    record.frames.reserve(n_frames);

    for (std::size_t t = 0; t < n_frames; ++t) {
        const double t_sec = static_cast<double>(t) / spec.fps;
        const double drift =
            spec.illum_drift_amp * std::sin(2.0 * M_PI * kDriftHz * t_sec);
        image_io::ImageU8 frame({3, spec.height, spec.width});
        const std::size_t plane_size =
            static_cast<std::size_t>(spec.height) * spec.width;
        for (int c = 0; c < 3; ++c) {
            const double skin = spec.skin_base_rgb[c] +
                                spec.modulation_amp[c] * bvp.values[t] + drift;
            const double bg = spec.background_rgb[c];
            unsigned char* plane = frame.data() + c * plane_size;
            if (spec.noise_std > 0) {
                for (std::size_t p = 0; p < plane_size; ++p) {
                    const double base = mask[p] ? skin : bg;
                    plane[p] = quantize(base + spec.noise_std * rng.normal());
                }
            } else {
                const unsigned char skin_q = quantize(skin);
                const unsigned char bg_q = quantize(bg);
                for (std::size_t p = 0; p < plane_size; ++p) {
                    plane[p] = mask[p] ? skin_q : bg_q;
                }
            }
        }
        record.frames.push_back(std::move(frame));
    }
    return record;
}

void write_record(const ingest::Record& record, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) {
        fail("synthgen.IoFailure",
             "cannot create '" + (dir / "frames").string() + "': " + ec.message());
    }

    char name[32];
    for (std::size_t i = 0; i < record.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        image_io::write_png(dir / "frames" / name, record.frames[i]);
    }

    {
        std::ofstream csv(dir / "bvp.csv", std::ios::binary);
        if (!csv) {
            fail("synthgen.IoFailure",
                 "cannot open '" + (dir / "bvp.csv").string() + "' for writing");
        }
        csv << "t_seconds,value\n";
        for (std::size_t i = 0; i < record.bvp_values.size(); ++i) {
            const double t = static_cast<double>(i) / record.bvp_fs;
            csv << format_double(t) << ',' << format_double(record.bvp_values[i])
                << '\n';
        }
        require(csv.good(), "synthgen.IoFailure", "failed writing bvp.csv");
    }

    nlohmann::json meta;
    meta["fps"] = record.fps;
    meta["identity"] = record.identity;
    if (record.hr_bpm >= 0) meta["hr_bpm"] = record.hr_bpm;
    for (const auto& [key, value] : record.meta) meta[key] = value;
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) {
        fail("synthgen.IoFailure",
             "cannot open '" + (dir / "meta.json").string() + "' for writing");
    }
    out << meta.dump(2) << '\n';
    require(out.good(), "synthgen.IoFailure", "failed writing meta.json");
}

ingest::DatasetIndex generate_dataset(const DatasetSpec& spec,
                                      std::uint64_t seed,
                                      const fs::path& root) {
    require(spec.num_identities >= 2, "synthgen.BadSpec",
            "need at least 2 identities");
    require(spec.records_per_identity >= 1, "synthgen.BadSpec",
            "need at least 1 record per identity");
    require(spec.hr_lo <= spec.hr_hi, "synthgen.BadSpec",
            "hr range must be nonempty");

    // HR values land on exact bins of one record duration: 60*k/duration bpm.
    const double bin_bpm = 60.0 / spec.duration_seconds;
    auto k_lo = static_cast<long long>(std::ceil(spec.hr_lo / bin_bpm - 1e-9));
    auto k_hi = static_cast<long long>(std::floor(spec.hr_hi / bin_bpm + 1e-9));
    while (static_cast<double>(k_lo) * bin_bpm <= 30.0) ++k_lo;
    while (static_cast<double>(k_hi) * bin_bpm >= 252.0) --k_hi;
    require(k_lo <= k_hi, "synthgen.BadSpec",
            "no exact spectral bin falls inside the hr range");

    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
        fail("synthgen.IoFailure",
             "cannot create '" + root.string() + "': " + ec.message());
    }

    Rng master(seed);
    char id_dir[32], rec_dir[32];
    for (int id = 0; id < spec.num_identities; ++id) {
        const EllipseContour contour =
            contour_for_identity(id, spec.height, spec.width);
        for (int r = 0; r < spec.records_per_identity; ++r) {
            SyntheticSpec rec_spec;
            rec_spec.identity = id;
            rec_spec.fps = spec.fps;
            rec_spec.duration_seconds = spec.duration_seconds;
            rec_spec.height = spec.height;
            rec_spec.width = spec.width;
            rec_spec.noise_std = spec.noise_std;
            rec_spec.illum_drift_amp = spec.illum_drift_amp;
            rec_spec.contour = contour;
            rec_spec.skin_base_rgb = spec.skin_base_rgb;
            rec_spec.modulation_amp = spec.modulation_amp;
            rec_spec.background_rgb = spec.background_rgb;
            const auto k =
                k_lo + static_cast<long long>(master.uniform_index(
                           static_cast<std::uint64_t>(k_hi - k_lo + 1)));
            rec_spec.hr_bpm = static_cast<double>(k) * bin_bpm;

            const std::uint64_t rec_seed = master.next_u64();
            std::snprintf(id_dir, sizeof(id_dir), "id_%02d", id);
            std::snprintf(rec_dir, sizeof(rec_dir), "rec_%03d", r);
            write_record(generate_record(rec_spec, rec_seed),
                         root / id_dir / rec_dir);
        }
    }
    return ingest::index_dataset(root);
}

}  // namespace pulsebench::synthgen
