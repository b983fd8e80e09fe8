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

#include "pulsebench/errors.hpp"
#include "pulsebench/rng.hpp"
#include "pulsebench/spectral.hpp"

using namespace pulsebench::spectral;
using pulsebench::Error;
using pulsebench::Rng;

namespace {

BvpTrace tone(double freq_hz, double fs, int n, double amp = 1.0, double phase = 0.0) {
    BvpTrace t;
    t.fs = fs;
    t.values.resize(n);
    for (int i = 0; i < n; ++i)
        t.values[i] = amp * std::sin(2.0 * M_PI * freq_hz * i / fs + phase);
    return t;
}

void add_tone(BvpTrace& t, double freq_hz, double amp) {
    for (std::size_t i = 0; i < t.values.size(); ++i)
        t.values[i] += amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / t.fs);
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("exact-bin tone concentrates all power in its bin") {
    auto t = tone(1.25, 30.0, 240);
    auto spec = power_spectrum(t);
    REQUIRE(spec.power.size() == 121);
    CHECK(spec.freqs[10] == doctest::Approx(1.25));
    const double peak = spec.power[10];
    CHECK(peak > 0);
    for (std::size_t k = 0; k < spec.power.size(); ++k) {
        if (k == 10) continue;
        CHECK(spec.power[k] < 1e-9 * peak);
    }
}

TEST_CASE("constant trace has negligible power everywhere") {
    BvpTrace t;
    t.fs = 30.0;
    t.values.assign(240, 0.7);
    auto spec = power_spectrum(t);
    for (double p : spec.power) CHECK(p < 1e-12);
}

TEST_CASE("two tones keep their amplitude ratio in power") {
    BvpTrace t;
    t.fs = 30.0;
    t.values.assign(240, 0.0);
    add_tone(t, 8.0 * 30.0 / 240.0, 1.0);   // bin 8
    add_tone(t, 20.0 * 30.0 / 240.0, 2.0);  // bin 20
    auto spec = power_spectrum(t);
    CHECK(spec.power[20] / spec.power[8] == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("freqs follow k*fs/T including odd lengths") {
    BvpTrace t;
    t.fs = 20.0;
    t.values.assign(17, 0.0);
    t.values[3] = 1.0;
    auto spec = power_spectrum(t);
    REQUIRE(spec.freqs.size() == 9);
    CHECK(spec.freqs[8] == doctest::Approx(8.0 * 20.0 / 17.0));
}

TEST_CASE("hard estimator returns the exact bin frequency") {
    CHECK(estimate_hr(tone(1.25, 30.0, 240)) == doctest::Approx(75.0).epsilon(1e-12));
}

TEST_CASE("out-of-band tone is masked") {
    auto t = tone(0.25, 30.0, 240);
    add_tone(t, 2.0, 0.1);
    CHECK(estimate_hr(t) == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("constant trace raises NoSpectralPeak") {
    BvpTrace t;
    t.fs = 30.0;
    t.values.assign(240, 3.0);
    try {
        estimate_hr(t);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "spectral.NoSpectralPeak");
    }
}

TEST_CASE("short trace raises TraceTooShort") {
    BvpTrace t;
    t.fs = 30.0;
    t.values.assign(8, 1.0);
    try {
        power_spectrum(t);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "spectral.TraceTooShort");
    }
}

TEST_CASE("band without bins raises EmptyBand") {
    auto t = tone(1.875, 30.0, 16);
    try {
        estimate_hr(t, HrBand{2.0, 2.1});
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "spectral.EmptyBand");
    }
}

TEST_CASE("scale and offset invariance of the hard estimator") {
    Rng rng(41);
    BvpTrace t = tone(1.5, 30.0, 240);
    for (auto& v : t.values) v += 0.05 * rng.normal();
    const double base = estimate_hr(t);
    BvpTrace scaled = t;
    for (auto& v : scaled.values) v = 17.0 * v + 123.0;
    CHECK(estimate_hr(scaled) == doctest::Approx(base).epsilon(1e-12));
    CHECK(base > 30.0);
    CHECK(base < 252.0);
}

TEST_CASE("soft estimator tracks the hard one at low temperature") {
    auto t = tone(1.25, 30.0, 240);
    add_tone(t, 2.5, 0.3);
    const double hard = estimate_hr(t);
    CHECK(std::abs(soft_hr(t, HrBand{}, 0.01) - hard) < 0.5);
    // one bin is 30/240 Hz = 7.5 bpm
    CHECK(std::abs(soft_hr(t, HrBand{}, 1e-3) - hard) < 7.5);
}

TEST_CASE("equal tones at 60 and 120 bpm split to 90 at low temperature") {
    BvpTrace t;
    t.fs = 30.0;
    t.values.assign(240, 0.0);
    add_tone(t, 1.0, 1.0);  // bin 8, 60 bpm
    add_tone(t, 2.0, 1.0);  // bin 16, 120 bpm
    CHECK(soft_hr(t, HrBand{}, 1e-3) == doctest::Approx(90.0).epsilon(1e-4));
}

TEST_CASE("infinite-temperature limit is the uniform in-band mean") {
    auto t = tone(1.25, 30.0, 240);
    const auto bins = detail::band_bins(240, 30.0, HrBand{});
    double mean_f = 0;
    for (int k : bins) mean_f += k * 30.0 / 240.0;
    mean_f /= static_cast<double>(bins.size());
    CHECK(soft_hr(t, HrBand{}, 1e9) == doctest::Approx(60.0 * mean_f).epsilon(1e-6));
}

TEST_CASE("soft estimator stays strictly inside the band on noise") {
    Rng rng(43);
    BvpTrace t;
    t.fs = 30.0;
    t.values.resize(240);
    for (auto& v : t.values) v = rng.normal();
    const double hr = soft_hr(t);
    CHECK(hr > 30.0);
    CHECK(hr < 252.0);
}

TEST_CASE("soft estimator gradient matches central finite differences") {
    Rng rng(44);
    const int n = 64;
    const double fs = 16.0;
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    std::vector<double> grad(n);
    const HrBand band;
    const double tau = 0.05;
    soft_hr_grad(x.data(), n, fs, band, tau, grad.data());

    std::vector<double> g2(n);
    const double h = 1e-4;
    for (int i = 0; i < n; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fp = soft_hr_grad(xp.data(), n, fs, band, tau, g2.data());
        const double fm = soft_hr_grad(xm.data(), n, fs, band, tau, g2.data());
        const double fd = (fp - fm) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
        CHECK(std::abs(fd - grad[i]) / denom < 1e-4);
    }
}

TEST_CASE("degenerate all-zero trace falls back without throwing in the grad path") {
    std::vector<double> x(64, 0.0), grad(64);
    const double hr = soft_hr_grad(x.data(), 64, 16.0, HrBand{}, 0.05, grad.data());
    CHECK(hr > 30.0);
    CHECK(hr < 252.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("phase shift leaves the estimate unchanged") {
    const double a = estimate_hr(tone(1.25, 30.0, 240, 1.0, 0.0));
    const double b = estimate_hr(tone(1.25, 30.0, 240, 1.0, 1.234));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

}
