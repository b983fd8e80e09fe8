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

#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/metrics.hpp"
#include "pulsebench/plot.hpp"
#include "pulsebench/rng.hpp"
#include "pulsebench/trainer.hpp"

using namespace pulsebench::plot;
using pulsebench::Error;
using pulsebench::Rng;
using pulsebench::image_io::ImageU8;
using pulsebench::trainer::EpochStats;
using pulsebench::trainer::TrainHistory;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string thrown_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

std::array<unsigned char, 3> pixel(const ImageU8& img, int x, int y) {
    const int h = img.shape()[1];
    const int w = img.shape()[2];
    std::array<unsigned char, 3> out{};
    for (int c = 0; c < 3; ++c) {
        out[static_cast<std::size_t>(c)] =
            img.data()[(static_cast<std::size_t>(c) * h + y) * w + x];
    }
    return out;
}

std::size_t count_color(const ImageU8& img, std::array<unsigned char, 3> rgb) {
    const int h = img.shape()[1];
    const int w = img.shape()[2];
    std::size_t n = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (pixel(img, x, y) == rgb) ++n;
        }
    }
    return n;
}

bool same_bytes(const ImageU8& a, const ImageU8& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(unsigned char)) == 0;
}

constexpr std::array<unsigned char, 3> kPaper = {252, 252, 250};

TrainHistory sample_history() {
    TrainHistory history;
    for (int epoch = 1; epoch <= 12; ++epoch) {
        EpochStats st;
        st.epoch = epoch;
        st.loss = 4.0 / epoch;
        if (epoch >= 3) {
            st.mae = 24.0 / epoch + 1.5;
            st.id_acc = 1.0 - 0.8 / epoch;
        }
        history.push_back(st);
    }
    return history;
}

}  // namespace

TEST_SUITE("plot") {

TEST_CASE("history chart has expected size and palette") {
    const ImageU8 img = render_history(sample_history());
    REQUIRE(img.shape() == std::vector<int>{3, 520, 900});
    CHECK(pixel(img, 0, 0) == kPaper);
    CHECK(pixel(img, 899, 519) == kPaper);
    // both curves actually left ink: error line in red, accuracy in blue
    CHECK(count_color(img, {198, 70, 54}) > 200);
    CHECK(count_color(img, {52, 98, 190}) > 200);
    CHECK(img.numel() / 3 - count_color(img, kPaper) > 1000);
}

TEST_CASE("history render is deterministic") {
    const ImageU8 a = render_history(sample_history());
    const ImageU8 b = render_history(sample_history());
    CHECK(same_bytes(a, b));
}

TEST_CASE("epochs without validation metrics are skipped, not fatal") {
    TrainHistory history = sample_history();
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
        history[i].mae = kNan;
        history[i].id_acc = kNan;
    }
    const ImageU8 img = render_history(history);
    CHECK(img.shape() == std::vector<int>{3, 520, 900});
}

TEST_CASE("history without any finite metric refuses to plot") {
    CHECK(thrown_code([] { render_history({}); }) == "plot.EmptyChart");
    TrainHistory blind = sample_history();
    for (EpochStats& st : blind) {
        st.mae = kNan;
        st.id_acc = kNan;
    }
    CHECK(thrown_code([&] { render_history(blind); }) == "plot.EmptyChart");
}

TEST_CASE("agreement chart draws limits and markers") {
    Rng rng(41);
    std::vector<double> gts, preds;
    for (int i = 0; i < 24; ++i) {
        const double hr = 65.0 + 4.0 * i;
        gts.push_back(hr);
        preds.push_back(hr + rng.normal(0.0, 3.0));
    }
    const auto stats = pulsebench::metrics::bland_altman(preds, gts);
    const ImageU8 img = render_bland_altman(stats);
    REQUIRE(img.shape() == std::vector<int>{3, 520, 900});
    CHECK(pixel(img, 0, 0) == kPaper);
    // dashed limit lines in red, scatter markers in blue, mean line in near-black
    CHECK(count_color(img, {198, 70, 54}) > 400);
    CHECK(count_color(img, {52, 98, 190}) >= 24 * 20);
    CHECK(count_color(img, {35, 35, 35}) > 300);
    CHECK(same_bytes(img, render_bland_altman(stats)));
}

TEST_CASE("agreement chart needs at least one point") {
    pulsebench::metrics::BlandAltmanStats empty;
    CHECK(thrown_code([&] { render_bland_altman(empty); }) == "plot.EmptyChart");
}

TEST_CASE("trace overlay standardizes both signals") {
    const double fs = 30.0;
    std::vector<double> reference, predicted;
    for (int i = 0; i < 240; ++i) {
        const double t = i / fs;
        reference.push_back(80.0 + 5.0 * std::sin(2.0 * M_PI * 1.2 * t));
        predicted.push_back(0.02 * std::sin(2.0 * M_PI * 1.2 * t + 0.3));
    }
    const ImageU8 img = render_overlay(predicted, reference, fs);
    REQUIRE(img.shape() == std::vector<int>{3, 420, 900});
    CHECK(pixel(img, 0, 0) == kPaper);
    CHECK(count_color(img, {198, 70, 54}) > 400);
    CHECK(count_color(img, {35, 35, 35}) > 400);
    CHECK(same_bytes(img, render_overlay(predicted, reference, fs)));
}

TEST_CASE("trace overlay rejects unusable input") {
    const std::vector<double> wave = {0.0, 1.0, 0.0, -1.0};
    const std::vector<double> flat = {2.0, 2.0, 2.0, 2.0};
    const std::vector<double> shorter = {0.0, 1.0, 0.0};
    CHECK(thrown_code([&] { render_overlay(wave, wave, 0.0); }) == "plot.BadTrace");
    CHECK(thrown_code([&] { render_overlay(wave, wave, -8.0); }) == "plot.BadTrace");
    CHECK(thrown_code([&] { render_overlay(wave, shorter, 8.0); }) == "plot.BadTrace");
    CHECK(thrown_code([&] { render_overlay({1.0}, {1.0}, 8.0); }) == "plot.BadTrace");
    CHECK(thrown_code([&] { render_overlay(flat, wave, 8.0); }) == "plot.BadTrace");
    CHECK(thrown_code([&] { render_overlay(wave, flat, 8.0); }) == "plot.BadTrace");
}

}  // TEST_SUITE
