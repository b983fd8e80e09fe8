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

#include <string>
#include <utility>
#include <vector>

namespace pulsebench::metrics {

struct MetricsReport {
    double sd = 0;    // sample standard deviation of pred - gt
    double mae = 0;
    double rmse = 0;
    double rho = 0;   // sample Pearson correlation of (pred, gt)
    int n = 0;
    std::vector<std::pair<double, double>> per_video;  // (pred_bpm, gt_bpm)
};

struct BlandAltmanStats {
    double mean_diff = 0;
    double loa_lo = 0;  // mean_diff - 1.96 * sd(diff)
    double loa_hi = 0;
    std::vector<std::pair<double, double>> points;  // ((pred+gt)/2, pred-gt)
};

/// Throws metrics.LengthMismatch (unequal or < 2 pairs) and
/// metrics.ZeroVariance (rho undefined: one series constant).
MetricsReport error_stats(const std::vector<double>& preds, const std::vector<double>& gts);

BlandAltmanStats bland_altman(const std::vector<double>& preds, const std::vector<double>& gts);

/// Arithmetic mean of per-segment estimates. Throws metrics.EmptyList.
double video_level_hr(const std::vector<double>& segment_hrs);

std::string to_json(const MetricsReport& report);

}  // namespace pulsebench::metrics
