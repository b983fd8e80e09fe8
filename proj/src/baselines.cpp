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

#include "pulsebench/baselines.hpp"

#include <cmath>
#include <vector>

#include "pulsebench/errors.hpp"

namespace pulsebench::baselines {

namespace {

struct RgbMeans {
    std::vector<double> r, g, b;
};

RgbMeans spatial_means(const TensorD& clip) {
    require(clip.rank() == 4 && clip.dim(1) == 3, "baselines.BadClip",
            "expected a T x 3 x H x W clip");
    const int t_dim = clip.dim(0);
    const std::size_t plane = static_cast<std::size_t>(clip.dim(2)) * clip.dim(3);
    require(plane > 0, "baselines.BadClip", "empty frames");

    RgbMeans m;
    m.r.resize(t_dim);
    m.g.resize(t_dim);
    m.b.resize(t_dim);
    std::vector<double>* channels[3] = {&m.r, &m.g, &m.b};
    for (int t = 0; t < t_dim; ++t) {
        for (int c = 0; c < 3; ++c) {
            const double* src =
                clip.data() + (static_cast<std::size_t>(t) * 3 + c) * plane;
            double sum = 0;
            for (std::size_t p = 0; p < plane; ++p) sum += src[p];
            (*channels[c])[t] = sum / static_cast<double>(plane);
        }
    }
    return m;
}

double mean_of(const std::vector<double>& v) {
    double sum = 0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double acc = 0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

void remove_mean(std::vector<double>* v) {
    const double mu = mean_of(*v);
    for (double& x : *v) x -= mu;
}

}  // namespace

spectral::BvpTrace green_trace(const TensorD& clip, double fps) {
    require(clip.rank() == 4 && clip.dim(0) >= 16, "baselines.TraceTooShort",
            "green needs at least 16 frames");
    const RgbMeans m = spatial_means(clip);

    spectral::BvpTrace trace;
    trace.fs = fps;
    trace.values = m.g;
    remove_mean(&trace.values);
    return trace;
}

spectral::BvpTrace chrom_trace(const TensorD& clip, double fps) {
    require(clip.rank() == 4 && clip.dim(0) >= 32, "baselines.TraceTooShort",
            "chrom needs at least 32 frames");
    const RgbMeans m = spatial_means(clip);
    const int t_dim = clip.dim(0);

    const double mu_r = mean_of(m.r);
    const double mu_g = mean_of(m.g);
    const double mu_b = mean_of(m.b);
    require(mu_r > 1e-12 && mu_g > 1e-12 && mu_b > 1e-12,
            "baselines.DegenerateColor", "temporal channel mean is zero");

    std::vector<double> x(t_dim), y(t_dim);
    for (int t = 0; t < t_dim; ++t) {
        const double r = m.r[t] / mu_r;
        const double g = m.g[t] / mu_g;
        const double b = m.b[t] / mu_b;
        x[t] = 3.0 * r - 2.0 * g;
        y[t] = 1.5 * r + g - 1.5 * b;
    }

    const double sx = std_of(x);
    const double sy = std_of(y);
    require(sy >= 1e-9, "baselines.DegenerateColor",
            "chrominance reference has no temporal variation");

    spectral::BvpTrace trace;
    trace.fs = fps;
    trace.values.resize(t_dim);
    const double alpha = sx / sy;
    for (int t = 0; t < t_dim; ++t) trace.values[t] = x[t] - alpha * y[t];
    remove_mean(&trace.values);
    return trace;
}

spectral::BvpTrace pos_trace(const TensorD& clip, double fps) {
    require(clip.rank() == 4 && clip.dim(0) >= 48, "baselines.TraceTooShort",
            "pos needs at least 48 frames");
    require(fps > 0, "baselines.BadClip", "fps must be positive");
    const RgbMeans m = spatial_means(clip);
    const int t_dim = clip.dim(0);

    const int window = std::min<int>(
        t_dim, static_cast<int>(std::llround(1.6 * fps)));
    require(window >= 2, "baselines.TraceTooShort",
            "1.6 s window shorter than 2 frames");

    std::vector<double> h(t_dim, 0.0);
    std::vector<double> s1(window), s2(window);
    for (int end = window; end <= t_dim; ++end) {
        const int start = end - window;
        double mu_r = 0, mu_g = 0, mu_b = 0;
        for (int t = start; t < end; ++t) {
            mu_r += m.r[t];
            mu_g += m.g[t];
            mu_b += m.b[t];
        }
        mu_r /= window;
        mu_g /= window;
        mu_b /= window;
        if (mu_r < 1e-12 || mu_g < 1e-12 || mu_b < 1e-12) continue;

        for (int t = start; t < end; ++t) {
            const double r = m.r[t] / mu_r;
            const double g = m.g[t] / mu_g;
            const double b = m.b[t] / mu_b;
            s1[t - start] = g - b;
            s2[t - start] = -2.0 * r + g + b;
        }
        const double sd2 = std_of(s2);
        const double alpha = sd2 > 1e-12 ? std_of(s1) / sd2 : 0.0;

        double mu_h = 0;
        for (int i = 0; i < window; ++i) mu_h += s1[i] + alpha * s2[i];
        mu_h /= window;
        for (int i = 0; i < window; ++i) {
            h[start + i] += s1[i] + alpha * s2[i] - mu_h;
        }
    }

    spectral::BvpTrace trace;
    trace.fs = fps;
    trace.values = std::move(h);
    remove_mean(&trace.values);
    return trace;
}

}  // namespace pulsebench::baselines
