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

#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "pulsebench/errors.hpp"
#include "pulsebench/metrics.hpp"
#include "pulsebench/rng.hpp"

using namespace pulsebench::metrics;
using pulsebench::Error;
using pulsebench::Rng;

TEST_SUITE("metrics") {

TEST_CASE("two-point hand example") {
    auto r = error_stats({72, 75}, {70, 80});
    CHECK(r.mae == doctest::Approx(3.5));
    CHECK(r.rmse == doctest::Approx(std::sqrt(14.5)));
    CHECK(r.n == 2);
}

TEST_CASE("constant offset gives perfect correlation") {
    std::vector<double> gts = {60, 72, 84, 90, 110};
    std::vector<double> preds;
    for (double g : gts) preds.push_back(g + 5.0);
    auto r = error_stats(preds, gts);
    CHECK(r.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.mae == doctest::Approx(5.0));
}

TEST_CASE("sample standard deviation uses n-1") {
    // errors are [1, -1]; both series vary so rho stays defined
    auto r = error_stats({1, 3}, {0, 4});
    CHECK(r.sd == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("length mismatch and tiny inputs throw") {
    try {
        error_stats({1, 2}, {1, 2, 3});
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "metrics.LengthMismatch");
    }
    try {
        error_stats({1}, {1});
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "metrics.LengthMismatch");
    }
}

TEST_CASE("constant series makes rho undefined") {
    try {
        error_stats({70, 70, 70}, {60, 72, 80});
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "metrics.ZeroVariance");
    }
}

TEST_CASE("rho is invariant under positive affine maps") {
    Rng rng(61);
    std::vector<double> p(30), g(30);
    for (int i = 0; i < 30; ++i) {
        g[i] = 60 + 60 * rng.uniform();
        p[i] = g[i] + 4 * rng.normal();
    }
    const double base = error_stats(p, g).rho;
    std::vector<double> p2;
    for (double v : p) p2.push_back(3.0 * v + 11.0);
    CHECK(error_stats(p2, g).rho == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("bland-altman hand example") {
    auto s = bland_altman({2, 4}, {0, 0});
    CHECK(s.mean_diff == doctest::Approx(3.0));
    CHECK(s.loa_lo == doctest::Approx(3.0 - 1.96 * std::sqrt(2.0)));
    CHECK(s.loa_hi == doctest::Approx(3.0 + 1.96 * std::sqrt(2.0)));
    REQUIRE(s.points.size() == 2);
    CHECK(s.points[0].first == doctest::Approx(1.0));
    CHECK(s.points[0].second == doctest::Approx(2.0));
}

TEST_CASE("identical series collapse the limits to zero") {
    auto s = bland_altman({70, 80, 90}, {70, 80, 90});
    CHECK(s.mean_diff == 0.0);
    CHECK(s.loa_lo == 0.0);
    CHECK(s.loa_hi == 0.0);
}

TEST_CASE("mean difference equals difference of means") {
    Rng rng(62);
    std::vector<double> p(40), g(40);
    double pm = 0, gm = 0;
    for (int i = 0; i < 40; ++i) {
        p[i] = 60 + 30 * rng.uniform();
        g[i] = 60 + 30 * rng.uniform();
        pm += p[i];
        gm += g[i];
    }
    auto s = bland_altman(p, g);
    CHECK(s.mean_diff == doctest::Approx(pm / 40 - gm / 40).epsilon(1e-9));
}

TEST_CASE("roughly 95 percent of normal diffs land inside the limits") {
    Rng rng(63);
    std::vector<double> p(100), g(100);
    for (int i = 0; i < 100; ++i) {
        g[i] = 75.0;
        p[i] = 75.0 + 2.0 * rng.normal();
    }
    auto s = bland_altman(p, g);
    int inside = 0;
    for (const auto& pt : s.points)
        if (pt.second >= s.loa_lo && pt.second <= s.loa_hi) ++inside;
    CHECK(inside >= 91);
    CHECK(inside <= 99);
}

TEST_CASE("video-level mean") {
    CHECK(video_level_hr({72, 74, 76}) == doctest::Approx(74.0));
    CHECK(video_level_hr({80}) == doctest::Approx(80.0));
    try {
        video_level_hr({});
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "metrics.EmptyList");
    }
}

TEST_CASE("brute-force recomputation agrees on random vectors") {
    Rng rng(64);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(40));
        std::vector<double> p(n), g(n);
        for (int i = 0; i < n; ++i) {
            p[i] = 40 + 140 * rng.uniform();
            g[i] = 40 + 140 * rng.uniform();
        }
        auto r = error_stats(p, g);

        // naive recomputation straight from the definitions
        double mae = 0, mse = 0, mp = 0, mg = 0, me = 0;
        for (int i = 0; i < n; ++i) {
            mae += std::abs(p[i] - g[i]);
            mse += (p[i] - g[i]) * (p[i] - g[i]);
            mp += p[i];
            mg += g[i];
            me += p[i] - g[i];
        }
        mae /= n;
        mse /= n;
        mp /= n;
        mg /= n;
        me /= n;
        double sd = 0, num = 0, dp2 = 0, dg2 = 0;
        for (int i = 0; i < n; ++i) {
            sd += (p[i] - g[i] - me) * (p[i] - g[i] - me);
            num += (p[i] - mp) * (g[i] - mg);
            dp2 += (p[i] - mp) * (p[i] - mp);
            dg2 += (g[i] - mg) * (g[i] - mg);
        }
        sd = std::sqrt(sd / (n - 1));

        CHECK(std::abs(r.mae - mae) < 1e-9);
        CHECK(std::abs(r.rmse - std::sqrt(mse)) < 1e-9);
        CHECK(std::abs(r.sd - sd) < 1e-9);
        CHECK(std::abs(r.rho - num / std::sqrt(dp2 * dg2)) < 1e-9);
        CHECK(r.mae <= r.rmse + 1e-12);
    }
}

TEST_CASE("json serialization carries the exact field names") {
    auto r = error_stats({72, 75, 71}, {70, 80, 69});
    auto j = nlohmann::json::parse(to_json(r));
    CHECK(j.at("sd").get<double>() == doctest::Approx(r.sd));
    CHECK(j.at("mae").get<double>() == doctest::Approx(r.mae));
    CHECK(j.at("rmse").get<double>() == doctest::Approx(r.rmse));
    CHECK(j.at("rho").get<double>() == doctest::Approx(r.rho));
    CHECK(j.at("n").get<int>() == 3);
    CHECK(j.at("per_video").size() == 3);
    CHECK(j.at("per_video")[1][0].get<double>() == doctest::Approx(75.0));
}

}
