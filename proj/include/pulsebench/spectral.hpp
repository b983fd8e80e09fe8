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

#include <cmath>
#include <vector>

#include "pulsebench/errors.hpp"

namespace pulsebench::spectral {

struct BvpTrace {
    std::vector<double> values;
    double fs = 0.0;
};

/// Open frequency interval searched for the pulse peak.
struct HrBand {
    double lo = 0.5;
    double hi = 4.2;
};

struct Spectrum {
    std::vector<double> freqs;  // Hz, k*fs/T for k in [0, T/2]
    std::vector<double> power;  // squared DFT magnitude of the mean-removed trace
};

/// Mean-removed, rectangular-window DFT power. Throws spectral.TraceTooShort
/// for traces shorter than 16 samples.
Spectrum power_spectrum(const BvpTrace& trace);

/// Hard estimator: 60 x frequency of the maximum-power bin strictly inside
/// the band. Ties break toward the lower frequency. Throws
/// spectral.EmptyBand when no bin falls in the open band and
/// spectral.NoSpectralPeak when in-band power is negligible.
double estimate_hr(const BvpTrace& trace, const HrBand& band = {});

/// Differentiable surrogate: 60 x sum_k f_k * softmax_k(P_k / (tau * max P))
/// over in-band bins, with the max taken over the same bins. Errors as
/// estimate_hr.
double soft_hr(const BvpTrace& trace, const HrBand& band = {}, double temperature = 0.05);

namespace detail {

/// In-band bin indices for an n-sample trace: k in [0, n/2] with
/// band.lo < k*fs/n < band.hi.
std::vector<int> band_bins(int n, double fs, const HrBand& band);

}  // namespace detail

/// Training-path soft estimator with gradient. Writes d hr / d values into
/// grad (length n, overwritten). Degenerate all-zero in-band power falls back
/// to uniform weighting with zero gradient instead of throwing, so the loss
/// stays finite on collapsed predictions.
template <typename T>
T soft_hr_grad(const T* values, int n, double fs, const HrBand& band, double temperature,
               T* grad) {
    require(n >= 16, "spectral.TraceTooShort", "soft_hr needs at least 16 samples");
    require(fs > 0, "spectral.InvalidRate", "sampling rate must be positive");
    require(temperature > 0, "spectral.InvalidTemperature", "temperature must be positive");
    const auto bins = detail::band_bins(n, fs, band);
    require(!bins.empty(), "spectral.EmptyBand", "no frequency bins inside the band");
    const int nb = static_cast<int>(bins.size());

    T mean = 0;
    for (int t = 0; t < n; ++t) mean += values[t];
    mean /= static_cast<T>(n);

    // DFT coefficients of the in-band bins only
    std::vector<T> re(nb), im(nb), power(nb);
    const double step = 2.0 * M_PI / n;
    for (int i = 0; i < nb; ++i) {
        const long long k = bins[i];
        T a = 0, b = 0;
        for (int t = 0; t < n; ++t) {
            const double ang = step * static_cast<double>(k * t % n);
            const T x = values[t] - mean;
            a += x * static_cast<T>(std::cos(ang));
            b += x * static_cast<T>(std::sin(ang));
        }
        re[i] = a;
        im[i] = b;
        power[i] = a * a + b * b;
    }

    int kmax = 0;
    for (int i = 1; i < nb; ++i)
        if (power[i] > power[kmax]) kmax = i;
    const T pmax = power[kmax];

    const T tau = static_cast<T>(temperature);
    std::vector<T> z(nb), s(nb);
    if (pmax > 0) {
        for (int i = 0; i < nb; ++i) z[i] = power[i] / (tau * pmax);
    } else {
        for (int i = 0; i < nb; ++i) z[i] = 0;
    }
    T zmax = z[0];
    for (int i = 1; i < nb; ++i) zmax = std::max(zmax, z[i]);
    T denom = 0;
    for (int i = 0; i < nb; ++i) {
        s[i] = std::exp(z[i] - zmax);
        denom += s[i];
    }
    for (int i = 0; i < nb; ++i) s[i] /= denom;

    T hr = 0;
    for (int i = 0; i < nb; ++i)
        hr += static_cast<T>(60.0 * bins[i] * fs / n) * s[i];

    for (int t = 0; t < n; ++t) grad[t] = 0;
    if (pmax > 0) {
        // dhr/dz_i = 60 s_i (f_i - fbar); dz_i/dP_j folds in the max bin
        std::vector<T> dp(nb);
        T gz_dot_z = 0;
        for (int i = 0; i < nb; ++i) {
            const T f = static_cast<T>(60.0 * bins[i] * fs / n);
            const T g = s[i] * (f - hr);
            dp[i] = g / (tau * pmax);
            gz_dot_z += g * z[i];
        }
        dp[kmax] -= gz_dot_z / pmax;
        for (int i = 0; i < nb; ++i) {
            const long long k = bins[i];
            const T ca = T(2) * dp[i] * re[i];
            const T cb = T(2) * dp[i] * im[i];
            for (int t = 0; t < n; ++t) {
                const double ang = step * static_cast<double>(k * t % n);
                grad[t] += ca * static_cast<T>(std::cos(ang)) + cb * static_cast<T>(std::sin(ang));
            }
        }
        T gmean = 0;
        for (int t = 0; t < n; ++t) gmean += grad[t];
        gmean /= static_cast<T>(n);
        for (int t = 0; t < n; ++t) grad[t] -= gmean;
    }
    return hr;
}

}  // namespace pulsebench::spectral
