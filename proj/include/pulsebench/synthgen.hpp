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

#include <array>
#include <cstdint>
#include <filesystem>

#include "pulsebench/ingest.hpp"
#include "pulsebench/spectral.hpp"

namespace pulsebench::synthgen {

/// Rotated ellipse in pixel coordinates (pixel centers at integer x, y).
struct EllipseContour {
    double cx = 0;
    double cy = 0;
    double ax = 1;  // semi-axis along the rotated x direction
    double ay = 1;
    double rotation = 0;  // radians
};

struct SyntheticSpec {
    int identity = 0;
    double hr_bpm = 75;
    double fps = 30;
    double duration_seconds = 8;
    int height = 128;
    int width = 128;
    double noise_std = 0;
    double illum_drift_amp = 0;
    EllipseContour contour;
    std::array<double, 3> skin_base_rgb = {170, 120, 100};
    std::array<double, 3> modulation_amp = {2, 6, 2};
    std::array<double, 3> background_rgb = {56, 60, 66};
};

struct DatasetSpec {
    int num_identities = 8;
    int records_per_identity = 20;
    double hr_lo = 60;
    double hr_hi = 150;
    double fps = 30;
    double duration_seconds = 8;
    int height = 128;
    int width = 128;
    double noise_std = 0;
    double illum_drift_amp = 0;
    std::array<double, 3> skin_base_rgb = {170, 120, 100};
    std::array<double, 3> modulation_amp = {2, 6, 2};
    std::array<double, 3> background_rgb = {56, 60, 66};
};

/// Deterministic per-identity ellipse. Distinct identities get distinct
/// centers, axes and rotations, all sized so the ellipse fits inside any
/// frame of 16 x 16 or larger with at least a one-pixel border.
EllipseContour contour_for_identity(int identity, int height, int width);

/// Pulse waveform sin(2*pi*f*t + phase) plus a 0.3-amplitude second harmonic,
/// normalized to unit peak; f = hr_bpm / 60, sampled at fps for the given
/// duration.
spectral::BvpTrace synth_bvp(double hr_bpm, double fps, double duration_seconds,
                             double phase);

/// Renders one record: skin pixels inside the contour carry the pulse
/// modulation plus optional illumination drift, background pixels do not,
/// and both get Gaussian noise. Byte-identical output for identical
/// (spec, seed). Throws synthgen.ContourOutOfFrame.
ingest::Record generate_record(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes a record in the ingest layout (frames/%06d.png, bvp.csv,
/// meta.json) with fixed text formatting so identical records give
/// byte-identical trees. Throws synthgen.IoFailure.
void write_record(const ingest::Record& record,
                  const std::filesystem::path& dir);

/// Generates num_identities x records_per_identity records under root, with
/// ground-truth HRs drawn uniformly from the exact spectral bins of one
/// record duration inside [hr_lo, hr_hi]. Deterministic under seed.
ingest::DatasetIndex generate_dataset(const DatasetSpec& spec,
                                      std::uint64_t seed,
                                      const std::filesystem::path& root);

}  // namespace pulsebench::synthgen
