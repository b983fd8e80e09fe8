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

#include "pulsebench/image_io.hpp"
#include "pulsebench/metrics.hpp"
#include "pulsebench/trainer.hpp"

// Static figure renderers backed by a small software rasterizer: axis-aligned
// charts with ticks, a 5x7 uppercase bitmap font, Bresenham-style lines, and
// square scatter markers. Everything returns an 8-bit RGB image for the PNG
// writer; nothing here is interactive.

namespace pulsebench::plot {

/// The per-epoch HR error and identification accuracy curves on twin
/// vertical scales. Epochs whose metrics are NaN (before the first
/// validation pass) are skipped. Throws plot.EmptyChart when no epoch has a
/// finite value.
image_io::ImageU8 render_history(const trainer::TrainHistory& history);

/// Agreement scatter (mean vs difference per record) with the mean-difference
/// line and dashed 95% limits of agreement. Throws plot.EmptyChart on an
/// empty point set.
image_io::ImageU8 render_bland_altman(const metrics::BlandAltmanStats& stats);

/// Predicted and reference pulse traces overlaid against seconds. Both
/// traces are standardized for display since the network's output scale is
/// arbitrary. Throws plot.BadTrace on an empty or constant pair, or fs <= 0.
image_io::ImageU8 render_overlay(const std::vector<double>& predicted,
                                 const std::vector<double>& reference, double fs);

}  // namespace pulsebench::plot
