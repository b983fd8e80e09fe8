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
#include <vector>

#include "pulsebench/nn.hpp"
#include "pulsebench/tensor.hpp"

// Temporal compressor: collapses a clip's time axis into one 2D map for the
// identity branch, plus the optional resolution-doubling upsample.

namespace pulsebench::tcu {

/// clip: T x C x H x W -> C x H x W, out[c,h,w] = mean_t clip[t,c,h,w].
/// Values are accumulated in sorted order so the result is exactly invariant
/// to permutations of the time axis despite floating-point rounding.
template <typename T>
Tensor<T> compress(const Tensor<T>& clip) {
    require(clip.rank() == 4, "tcu.ShapeError", "clip must be T x C x H x W");
    const int tn = clip.dim(0), c = clip.dim(1), h = clip.dim(2), w = clip.dim(3);
    Tensor<T> out({c, h, w});
    const std::size_t chw = static_cast<std::size_t>(c) * h * w;
    std::vector<T> vals(tn);
    const T inv = T(1) / static_cast<T>(tn);
    for (std::size_t i = 0; i < chw; ++i) {
        for (int t = 0; t < tn; ++t) vals[t] = clip[t * chw + i];
        std::sort(vals.begin(), vals.end());
        T s = 0;
        for (int t = 0; t < tn; ++t) s += vals[t];
        out[i] = s * inv;
    }
    return out;
}

/// Gradient of compress: spreads dout evenly across the T frames.
template <typename T>
Tensor<T> compress_backward(const Tensor<T>& dout, int tn) {
    const int c = dout.dim(0), h = dout.dim(1), w = dout.dim(2);
    Tensor<T> din({tn, c, h, w});
    const std::size_t chw = static_cast<std::size_t>(c) * h * w;
    const T inv = T(1) / static_cast<T>(tn);
    for (int t = 0; t < tn; ++t) {
        T* dst = din.data() + t * chw;
        for (std::size_t i = 0; i < chw; ++i) dst[i] = dout[i] * inv;
    }
    return din;
}

/// Bilinear upsample of a C x H x W map by an integer factor; factor 1 is the
/// identity.
template <typename T>
Tensor<T> upsample(const Tensor<T>& map, int factor) {
    require(map.rank() == 3, "tcu.ShapeError", "map must be C x H x W");
    require(factor >= 1, "tcu.BadFactor", "upsample factor must be >= 1");
    return nn::bilinear_resize(map, map.dim(1) * factor, map.dim(2) * factor);
}

template <typename T>
Tensor<T> upsample_backward(const Tensor<T>& dout, int h, int w) {
    return nn::bilinear_resize_backward(dout, h, w);
}

}  // namespace pulsebench::tcu
