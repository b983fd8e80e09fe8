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

#include "pulsebench/spectral.hpp"

#include <algorithm>

namespace pulsebench::spectral {

namespace detail {

std::vector<int> band_bins(int n, double fs, const HrBand& band) {
    require(band.lo > 0 && band.lo < band.hi, "spectral.InvalidBand",
            "band must satisfy 0 < lo < hi");
    std::vector<int> bins;
    for (int k = 0; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * fs / n;
        if (f > band.lo && f < band.hi) bins.push_back(k);
    }
    return bins;
}

}  // namespace detail

Spectrum power_spectrum(const BvpTrace& trace) {
    const int n = static_cast<int>(trace.values.size());
    require(n >= 16, "spectral.TraceTooShort", "need at least 16 samples");
    require(trace.fs > 0, "spectral.InvalidRate", "sampling rate must be positive");

    double mean = 0;
    for (double v : trace.values) mean += v;
    mean /= n;

    Spectrum out;
    const int nk = n / 2 + 1;
    out.freqs.resize(nk);
    out.power.resize(nk);
    const double step = 2.0 * M_PI / n;
    for (int k = 0; k < nk; ++k) {
        double a = 0, b = 0;
        for (int t = 0; t < n; ++t) {
            const double ang = step * static_cast<double>(static_cast<long long>(k) * t % n);
            const double x = trace.values[t] - mean;
            a += x * std::cos(ang);
            b += x * std::sin(ang);
        }
        out.freqs[k] = static_cast<double>(k) * trace.fs / n;
        out.power[k] = a * a + b * b;
    }
    return out;
}

double estimate_hr(const BvpTrace& trace, const HrBand& band) {
    const Spectrum spec = power_spectrum(trace);
    const int n = static_cast<int>(trace.values.size());
    const auto bins = detail::band_bins(n, trace.fs, band);
    require(!bins.empty(), "spectral.EmptyBand", "no frequency bins inside the band");

    double total = 0;
    for (double p : spec.power) total += p;
    double in_band = 0;
    for (int k : bins) in_band += spec.power[k];
    require(in_band > 1e-10 * total && in_band > 0, "spectral.NoSpectralPeak",
            "no significant spectral peak inside the band");

    int best = bins[0];
    for (int k : bins)
        if (spec.power[k] > spec.power[best]) best = k;
    return 60.0 * spec.freqs[best];
}

double soft_hr(const BvpTrace& trace, const HrBand& band, double temperature) {
    // reuse the hard estimator's degenerate-input policy
    const Spectrum spec = power_spectrum(trace);
    const int n = static_cast<int>(trace.values.size());
    const auto bins = detail::band_bins(n, trace.fs, band);
    require(!bins.empty(), "spectral.EmptyBand", "no frequency bins inside the band");
    double total = 0;
    for (double p : spec.power) total += p;
    double in_band = 0;
    for (int k : bins) in_band += spec.power[k];
    require(in_band > 1e-10 * total && in_band > 0, "spectral.NoSpectralPeak",
            "no significant spectral peak inside the band");

    std::vector<double> grad(trace.values.size());
    return soft_hr_grad(trace.values.data(), n, trace.fs, band, temperature, grad.data());
}

}  // namespace pulsebench::spectral
