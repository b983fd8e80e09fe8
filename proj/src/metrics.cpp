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

#include "pulsebench/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "pulsebench/errors.hpp"

namespace pulsebench::metrics {

namespace {

void check_pair_lengths(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "metrics.LengthMismatch",
            "prediction and ground-truth lists differ in length");
    require(a.size() >= 2, "metrics.LengthMismatch", "need at least 2 pairs");
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

MetricsReport error_stats(const std::vector<double>& preds, const std::vector<double>& gts) {
    check_pair_lengths(preds, gts);
    const int n = static_cast<int>(preds.size());

    MetricsReport r;
    r.n = n;
    r.per_video.reserve(n);
    std::vector<double> err(n);
    for (int i = 0; i < n; ++i) {
        err[i] = preds[i] - gts[i];
        r.per_video.emplace_back(preds[i], gts[i]);
    }

    double abs_sum = 0, sq_sum = 0;
    for (double e : err) {
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    r.mae = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);

    const double err_mean = mean_of(err);
    double err_var = 0;
    for (double e : err) err_var += (e - err_mean) * (e - err_mean);
    r.sd = std::sqrt(err_var / (n - 1));

    const double pm = mean_of(preds), gm = mean_of(gts);
    double spp = 0, sgg = 0, spg = 0;
    for (int i = 0; i < n; ++i) {
        const double dp = preds[i] - pm, dg = gts[i] - gm;
        spp += dp * dp;
        sgg += dg * dg;
        spg += dp * dg;
    }
    const double tol_p = 1e-12 * (1.0 + std::abs(pm));
    const double tol_g = 1e-12 * (1.0 + std::abs(gm));
    require(spp > tol_p * tol_p * n && sgg > tol_g * tol_g * n, "metrics.ZeroVariance",
            "correlation undefined: a series is constant");
    r.rho = spg / std::sqrt(spp * sgg);

    require(r.mae <= r.rmse + 1e-12, "metrics.Internal", "mae exceeded rmse");
    return r;
}

BlandAltmanStats bland_altman(const std::vector<double>& preds, const std::vector<double>& gts) {
    check_pair_lengths(preds, gts);
    const int n = static_cast<int>(preds.size());

    BlandAltmanStats s;
    s.points.reserve(n);
    std::vector<double> diffs(n);
    for (int i = 0; i < n; ++i) {
        diffs[i] = preds[i] - gts[i];
        s.points.emplace_back((preds[i] + gts[i]) / 2.0, diffs[i]);
    }
    s.mean_diff = mean_of(diffs);
    double var = 0;
    for (double d : diffs) var += (d - s.mean_diff) * (d - s.mean_diff);
    const double sd = std::sqrt(var / (n - 1));
    s.loa_lo = s.mean_diff - 1.96 * sd;
    s.loa_hi = s.mean_diff + 1.96 * sd;
    return s;
}

double video_level_hr(const std::vector<double>& segment_hrs) {
    require(!segment_hrs.empty(), "metrics.EmptyList", "no segment estimates to average");
    return mean_of(segment_hrs);
}

std::string to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["sd"] = report.sd;
    j["mae"] = report.mae;
    j["rmse"] = report.rmse;
    j["rho"] = report.rho;
    j["n"] = report.n;
    auto& pv = j["per_video"] = nlohmann::json::array();
    for (const auto& [pred, gt] : report.per_video) pv.push_back({pred, gt});
    return j.dump(2);
}

}  // namespace pulsebench::metrics
