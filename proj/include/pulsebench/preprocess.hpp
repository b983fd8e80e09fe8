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

#include <vector>

#include "pulsebench/ingest.hpp"
#include "pulsebench/tensor.hpp"

namespace pulsebench::preprocess {

/// One training or evaluation window: standardized frames plus aligned
/// ground-truth labels.
struct FrameClip {
    TensorF data;  // T x C x H x W, standardized per channel
    double fps = 0;
    int identity = 0;
    std::vector<double> bvp;  // length T, at the frame rate
    double hr_bpm = 0;
};

/// Stacks count frames starting at first into a T x C x H x W byte tensor.
Tensor<unsigned char> stack_frames(const std::vector<image_io::ImageU8>& frames,
                                   std::size_t first, std::size_t count);

/// Per-clip, per-channel standardization: each channel of a T x C x H x W
/// clip has its mean over (T, H, W) subtracted and is divided by the
/// population standard deviation over the same axes. Channels whose standard
/// deviation is below 1e-6 become all zeros.
TensorF standardize_clip(const Tensor<unsigned char>& raw);
TensorF standardize_clip(const TensorF& raw);

/// The record's bvp trace linearly resampled to one sample per frame.
std::vector<double> bvp_at_frame_rate(const ingest::Record& record);

/// Sliding standardized windows of length t_frames at the given stride, each
/// paired with its bvp slice and the spectral HR of that slice. Throws
/// preprocess.ClipTooLong when t_frames exceeds the record.
std::vector<FrameClip> window_clips(const ingest::Record& record, int t_frames,
                                    int stride);

/// Test-time segmentation: records of at least 3x target_seconds are divided
/// into 3 or 4 equal parts (round(duration / target), clamped); shorter
/// records give floor(duration / target) segments of round(target * fps)
/// frames from the start, at least one. Throws preprocess.RecordTooShort
/// below 2 seconds.
std::vector<FrameClip> segment_for_eval(const ingest::Record& record,
                                        double target_seconds = 8.0);

}  // namespace pulsebench::preprocess
