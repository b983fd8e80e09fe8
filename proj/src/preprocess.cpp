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

#include <algorithm>
#include <cmath>

#include "pulsebench/errors.hpp"
#include "pulsebench/spectral.hpp"

namespace pulsebench::preprocess {

namespace {

FrameClip make_clip(const ingest::Record& record,
                    const std::vector<double>& frame_bvp, std::size_t first,
                    std::size_t count) {
    FrameClip clip;
    clip.data = standardize_clip(stack_frames(record.frames, first, count));
    clip.fps = record.fps;
    clip.identity = record.identity;
    clip.bvp.assign(frame_bvp.begin() + static_cast<std::ptrdiff_t>(first),
                    frame_bvp.begin() + static_cast<std::ptrdiff_t>(first + count));

    spectral::BvpTrace trace;
    trace.values = clip.bvp;
    trace.fs = record.fps;
    clip.hr_bpm = spectral::estimate_hr(trace);
    return clip;
}

}  // namespace

Tensor<unsigned char> stack_frames(const std::vector<image_io::ImageU8>& frames,
                                   std::size_t first, std::size_t count) {
    require(count >= 1 && first + count <= frames.size(), "preprocess.BadWindow",
            "frame window out of range");
    const int c = frames[first].dim(0);
    const int h = frames[first].dim(1);
    const int w = frames[first].dim(2);

    Tensor<unsigned char> out({static_cast<int>(count), c, h, w});
    const std::size_t frame_elems = frames[first].numel();
    for (std::size_t t = 0; t < count; ++t) {
        const image_io::ImageU8& frame = frames[first + t];
        require(frame.dim(0) == c && frame.dim(1) == h && frame.dim(2) == w,
                "preprocess.BadWindow", "frames change shape mid-record");
        std::copy(frame.data(), frame.data() + frame_elems,
                  out.data() + t * frame_elems);
    }
    return out;
}

namespace {

template <typename Src>
TensorF standardize_impl(const Tensor<Src>& raw) {
    require(raw.rank() == 4 && raw.dim(0) >= 2, "preprocess.BadClip",
            "expected a T x C x H x W clip with T >= 2");
    const int t_dim = raw.dim(0);
    const int c_dim = raw.dim(1);
    const std::size_t plane = static_cast<std::size_t>(raw.dim(2)) * raw.dim(3);
    const std::size_t per_channel = static_cast<std::size_t>(t_dim) * plane;

    TensorF out(raw.shape());
    for (int c = 0; c < c_dim; ++c) {
        double sum = 0;
        for (int t = 0; t < t_dim; ++t) {
            const Src* src =
                raw.data() + (static_cast<std::size_t>(t) * c_dim + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) sum += src[p];
        }
        const double n = static_cast<double>(per_channel);
        const double mean = sum / n;

        double sum_sq = 0;
        for (int t = 0; t < t_dim; ++t) {
            const Src* src =
                raw.data() + (static_cast<std::size_t>(t) * c_dim + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                const double d = src[p] - mean;
                sum_sq += d * d;
            }
        }
        const double std_dev = std::sqrt(sum_sq / n);

        for (int t = 0; t < t_dim; ++t) {
            const Src* src =
                raw.data() + (static_cast<std::size_t>(t) * c_dim + c) * plane;
            float* dst =
                out.data() + (static_cast<std::size_t>(t) * c_dim + c) * plane;
            if (std_dev < 1e-6) {
                for (std::size_t p = 0; p < plane; ++p) dst[p] = 0.0f;
            } else {
                for (std::size_t p = 0; p < plane; ++p) {
                    dst[p] = static_cast<float>((src[p] - mean) / std_dev);
                }
            }
        }
    }
    return out;
}

}  // namespace

TensorF standardize_clip(const Tensor<unsigned char>& raw) {
    return standardize_impl(raw);
}

TensorF standardize_clip(const TensorF& raw) { return standardize_impl(raw); }

std::vector<double> bvp_at_frame_rate(const ingest::Record& record) {
    const std::size_t n_frames = record.frames.size();
    std::vector<double> bvp = record.bvp_values;
    if (bvp.size() != n_frames) {
        bvp = ingest::resample_labels(bvp, record.bvp_fs, record.fps);
    }
    // Resampling can land one sample short or long of the frame count.
    while (bvp.size() < n_frames) bvp.push_back(bvp.back());
    bvp.resize(n_frames);
    return bvp;
}

std::vector<FrameClip> window_clips(const ingest::Record& record, int t_frames,
                                    int stride) {
    const std::size_t n = record.frames.size();
    require(t_frames >= 2, "preprocess.BadClip", "window must cover >= 2 frames");
    require(stride >= 1, "preprocess.BadStride", "stride must be >= 1");
    require(static_cast<std::size_t>(t_frames) <= n, "preprocess.ClipTooLong",
            "window of " + std::to_string(t_frames) + " frames exceeds record of " +
                std::to_string(n));

    const std::vector<double> frame_bvp = bvp_at_frame_rate(record);
    std::vector<FrameClip> clips;
    for (std::size_t start = 0; start + t_frames <= n;
         start += static_cast<std::size_t>(stride)) {
        clips.push_back(make_clip(record, frame_bvp, start,
                                  static_cast<std::size_t>(t_frames)));
    }
    return clips;
}

std::vector<FrameClip> segment_for_eval(const ingest::Record& record,
                                        double target_seconds) {
    require(target_seconds > 0, "preprocess.BadClip",
            "target_seconds must be positive");
    const std::size_t n = record.frames.size();
    const double duration = record.duration_seconds();
    require(duration >= 2.0, "preprocess.RecordTooShort",
            "record of " + std::to_string(duration) + " s is below 2 s");

    const std::vector<double> frame_bvp = bvp_at_frame_rate(record);
    std::vector<FrameClip> segments;

    if (duration >= 3.0 * target_seconds) {
        const auto count = static_cast<std::size_t>(std::clamp<long long>(
            std::llround(duration / target_seconds), 3, 4));
        const std::size_t len = n / count;
        for (std::size_t i = 0; i < count; ++i) {
            segments.push_back(make_clip(record, frame_bvp, i * len, len));
        }
    } else {
        const auto by_floor =
            static_cast<std::size_t>(std::floor(duration / target_seconds));
        const std::size_t count = std::max<std::size_t>(1, by_floor);
        const std::size_t len = std::min(
            n, static_cast<std::size_t>(std::llround(target_seconds * record.fps)));
        for (std::size_t i = 0; i < count; ++i) {
            segments.push_back(make_clip(record, frame_bvp, i * len, len));
        }
    }
    return segments;
}

}  // namespace pulsebench::preprocess
