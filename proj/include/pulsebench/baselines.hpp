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

#include "pulsebench/spectral.hpp"
#include "pulsebench/tensor.hpp"

namespace pulsebench::baselines {

/// Classical pulse extractors over a raw (unstandardized) T x 3 x H x W clip.
/// Each returns a mean-removed trace sampled at fps.

/// Per-frame spatial mean of the green channel. Needs T >= 16; throws
/// baselines.TraceTooShort.
spectral::BvpTrace green_trace(const TensorD& clip, double fps);

/// Chrominance method: per-frame RGB means normalized by their temporal
/// means, X = 3R - 2G and Y = 1.5R + G - 1.5B combined as X - (sX/sY) Y.
/// Needs T >= 32; throws baselines.TraceTooShort and baselines.DegenerateColor
/// when the chrominance denominator vanishes.
spectral::BvpTrace chrom_trace(const TensorD& clip, double fps);

/// Plane-orthogonal-to-skin method: 1.6 s sliding windows of
/// window-normalized RGB means projected onto [0,1,-1] and [-2,1,1],
/// alpha-combined and overlap-added back to length T. Needs T >= 48; throws
/// baselines.TraceTooShort.
spectral::BvpTrace pos_trace(const TensorD& clip, double fps);

}  // namespace pulsebench::baselines
