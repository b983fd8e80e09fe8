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

#include "pulsebench/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>

#include "pulsebench/errors.hpp"

namespace pulsebench::plot {

namespace {

using Rgb = std::array<unsigned char, 3>;

constexpr Rgb kBackground = {252, 252, 250};
constexpr Rgb kAxis = {60, 60, 60};
constexpr Rgb kGrid = {225, 225, 222};
constexpr Rgb kText = {40, 40, 40};
constexpr Rgb kRed = {198, 70, 54};
constexpr Rgb kBlue = {52, 98, 190};
constexpr Rgb kDark = {35, 35, 35};

// 5x7 glyphs, one byte per row, low 5 bits used.
struct Glyph {
    char ch;
    std::array<std::uint8_t, 7> rows;
};

constexpr Glyph kFont[] = {
    {' ', {0, 0, 0, 0, 0, 0, 0}},
    {'%', {0b11001, 0b11010, 0b00010, 0b00100, 0b01000, 0b01011, 0b10011}},
    {'(', {0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010}},
    {')', {0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000}},
    {'+', {0b00000, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0b00000}},
    {'-', {0b00000, 0b00000, 0b00000, 0b01110, 0b00000, 0b00000, 0b00000}},
    {'.', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100}},
    {'/', {0b00001, 0b00010, 0b00100, 0b00100, 0b00100, 0b01000, 0b10000}},
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {':', {0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b01100, 0b00000}},
    {'=', {0b00000, 0b00000, 0b11111, 0b00000, 0b11111, 0b00000, 0b00000}},
    {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'B', {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110}},
    {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
    {'D', {0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100}},
    {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
    {'F', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'G', {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111}},
    {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'I', {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'J', {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100}},
    {'K', {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001}},
    {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    {'M', {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
    {'N', {0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001}},
    {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'P', {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'Q', {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101}},
    {'R', {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001}},
    {'S', {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110}},
    {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'U', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'V', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100}},
    {'W', {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010}},
    {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
    {'Y', {0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'Z', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111}},
};

const std::array<std::uint8_t, 7>& glyph_rows(char ch) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (const Glyph& g : kFont) {
        if (g.ch == up) return g.rows;
    }
    static constexpr std::array<std::uint8_t, 7> box = {0b11111, 0b10001, 0b10001, 0b10001,
                                                        0b10001, 0b10001, 0b11111};
    return box;
}

struct Canvas {
    image_io::ImageU8 img;
    int w = 0, h = 0;

    Canvas(int width, int height) : img({3, height, width}), w(width), h(height) {
        for (int c = 0; c < 3; ++c) {
            unsigned char* plane = img.data() + static_cast<std::size_t>(c) * h * w;
            std::fill(plane, plane + static_cast<std::size_t>(h) * w, kBackground[c]);
        }
    }

    void set(int x, int y, const Rgb& color) {
        if (x < 0 || x >= w || y < 0 || y >= h) return;
        for (int c = 0; c < 3; ++c) {
            img.data()[(static_cast<std::size_t>(c) * h + y) * w + x] = color[c];
        }
    }

    void line(double x0, double y0, double x1, double y1, const Rgb& color) {
        const double dx = x1 - x0, dy = y1 - y0;
        const int steps = static_cast<int>(std::max(std::abs(dx), std::abs(dy))) + 1;
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            set(static_cast<int>(std::lround(x0 + t * dx)),
                static_cast<int>(std::lround(y0 + t * dy)), color);
        }
    }

    void thick_line(double x0, double y0, double x1, double y1, const Rgb& color) {
        line(x0, y0, x1, y1, color);
        line(x0, y0 + 1, x1, y1 + 1, color);
        line(x0 + 1, y0, x1 + 1, y1, color);
    }

    void hline_dashed(int x0, int x1, int y, const Rgb& color) {
        for (int x = x0; x <= x1; ++x) {
            if ((x - x0) % 8 < 5) {
                set(x, y, color);
                set(x, y + 1, color);
            }
        }
    }

    void marker(int x, int y, const Rgb& color) {
        for (int dy = -2; dy <= 2; ++dy) {
            for (int dx = -2; dx <= 2; ++dx) set(x + dx, y + dy, color);
        }
    }

    void text(int x, int y, const std::string& s, const Rgb& color, int scale = 1) {
        int cx = x;
        for (char ch : s) {
            const auto& rows = glyph_rows(ch);
            for (int ry = 0; ry < 7; ++ry) {
                for (int rx = 0; rx < 5; ++rx) {
                    if (!(rows[static_cast<std::size_t>(ry)] >> (4 - rx) & 1)) continue;
                    for (int sy = 0; sy < scale; ++sy) {
                        for (int sx = 0; sx < scale; ++sx) {
                            set(cx + rx * scale + sx, y + ry * scale + sy, color);
                        }
                    }
                }
            }
            cx += 6 * scale;
        }
    }

    int text_width(const std::string& s, int scale = 1) const {
        return static_cast<int>(s.size()) * 6 * scale - scale;
    }
};

std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct Range {
    double lo = 0, hi = 1;

    void pad() {
        if (hi - lo < 1e-12) {
            const double bump = std::max(0.5, std::abs(hi) * 0.1);
            lo -= bump;
            hi += bump;
        } else {
            const double margin = (hi - lo) * 0.06;
            lo -= margin;
            hi += margin;
        }
    }
};

Range span_of(const std::vector<double>& values) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        r.lo = std::min(r.lo, v);
        r.hi = std::max(r.hi, v);
    }
    require(r.lo <= r.hi, "plot.EmptyChart", "no finite values to plot");
    return r;
}

double nice_step(double range, int target) {
    const double raw = range / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
    return step * mag;
}

struct Frame {
    int left, right, top, bottom;  // plot rectangle in pixels

    double x_at(double v, const Range& r) const {
        return left + (v - r.lo) / (r.hi - r.lo) * (right - left);
    }
    double y_at(double v, const Range& r) const {
        return top + (r.hi - v) / (r.hi - r.lo) * (bottom - top);
    }
};

void draw_frame(Canvas& cv, const Frame& f, const Range& xr, const Range& yr,
                const std::string& title, const std::string& x_label,
                const std::string& y_label) {
    cv.text((f.left + f.right - cv.text_width(title, 2)) / 2, 8, title, kText, 2);

    const double xstep = nice_step(xr.hi - xr.lo, 7);
    for (double v = std::ceil(xr.lo / xstep) * xstep; v <= xr.hi + 1e-9 * xstep; v += xstep) {
        const int x = static_cast<int>(std::lround(f.x_at(v, xr)));
        cv.line(x, f.top, x, f.bottom, kGrid);
        cv.line(x, f.bottom, x, f.bottom + 4, kAxis);
        const std::string label = format_tick(std::abs(v) < 1e-12 * xstep ? 0.0 : v);
        cv.text(x - cv.text_width(label) / 2, f.bottom + 8, label, kText);
    }
    const double ystep = nice_step(yr.hi - yr.lo, 6);
    for (double v = std::ceil(yr.lo / ystep) * ystep; v <= yr.hi + 1e-9 * ystep; v += ystep) {
        const int y = static_cast<int>(std::lround(f.y_at(v, yr)));
        cv.line(f.left, y, f.right, y, kGrid);
        cv.line(f.left - 4, y, f.left, y, kAxis);
        const std::string label = format_tick(std::abs(v) < 1e-12 * ystep ? 0.0 : v);
        cv.text(f.left - 8 - cv.text_width(label), y - 3, label, kText);
    }

    cv.line(f.left, f.top, f.left, f.bottom, kAxis);
    cv.line(f.left, f.bottom, f.right, f.bottom, kAxis);
    cv.text((f.left + f.right - cv.text_width(x_label)) / 2, f.bottom + 22, x_label, kText);
    cv.text(f.left, f.top - 14, y_label, kText);
}

void polyline(Canvas& cv, const Frame& f, const Range& xr, const Range& yr,
              const std::vector<double>& xs, const std::vector<double>& ys, const Rgb& color) {
    bool have_prev = false;
    double px = 0, py = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(ys[i])) {
            have_prev = false;
            continue;
        }
        const double x = f.x_at(xs[i], xr);
        const double y = f.y_at(ys[i], yr);
        if (have_prev) cv.thick_line(px, py, x, y, color);
        have_prev = true;
        px = x;
        py = y;
    }
}

std::vector<double> standardized(const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    require(var > 0, "plot.BadTrace", "constant trace cannot be standardized");
    const double inv = 1.0 / std::sqrt(var);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) * inv;
    return out;
}

}  // namespace

image_io::ImageU8 render_history(const trainer::TrainHistory& history) {
    require(!history.empty(), "plot.EmptyChart", "history has no epochs");
    std::vector<double> epochs, maes, accs;
    for (const trainer::EpochStats& st : history) {
        epochs.push_back(st.epoch);
        maes.push_back(st.mae);
        accs.push_back(st.id_acc * 100.0);
    }
    std::vector<double> finite;
    for (double v : maes) {
        if (std::isfinite(v)) finite.push_back(v);
    }
    require(!finite.empty(), "plot.EmptyChart", "no finite validation metrics to plot");

    Canvas cv(900, 520);
    const Frame f{70, 830, 36, 460};
    Range xr = span_of(epochs);
    xr.pad();
    Range yr = span_of(maes);
    yr.lo = std::min(yr.lo, 0.0);
    yr.pad();
    Range ar{0, 100};

    draw_frame(cv, f, xr, yr, "HR ERROR VS IDENTIFICATION", "EPOCH", "MAE (BPM)");

    const double astep = 20;
    for (double v = 0; v <= 100; v += astep) {
        const int y = static_cast<int>(std::lround(f.y_at(v, ar)));
        cv.line(f.right, y, f.right + 4, y, kAxis);
        cv.text(f.right + 8, y - 3, format_tick(v), kText);
    }
    cv.line(f.right, f.top, f.right, f.bottom, kAxis);
    cv.text(f.right - cv.text_width("ACCURACY (%)"), f.top - 14, "ACCURACY (%)", kText);

    polyline(cv, f, xr, yr, epochs, maes, kRed);
    polyline(cv, f, xr, ar, epochs, accs, kBlue);

    cv.marker(f.left + 12, f.top + 12, kRed);
    cv.text(f.left + 20, f.top + 9, "MAE", kText);
    cv.marker(f.left + 70, f.top + 12, kBlue);
    cv.text(f.left + 78, f.top + 9, "ACCURACY", kText);
    return std::move(cv.img);
}

image_io::ImageU8 render_bland_altman(const metrics::BlandAltmanStats& stats) {
    require(!stats.points.empty(), "plot.EmptyChart", "no agreement points");
    std::vector<double> xs, ys;
    for (const auto& [mean, diff] : stats.points) {
        xs.push_back(mean);
        ys.push_back(diff);
    }

    Canvas cv(900, 520);
    const Frame f{70, 850, 36, 460};
    Range xr = span_of(xs);
    xr.pad();
    Range yr = span_of(ys);
    yr.lo = std::min(yr.lo, stats.loa_lo);
    yr.hi = std::max(yr.hi, stats.loa_hi);
    yr.pad();

    draw_frame(cv, f, xr, yr, "AGREEMENT", "MEAN HR (BPM)", "DIFFERENCE (BPM)");

    const int y_mean = static_cast<int>(std::lround(f.y_at(stats.mean_diff, yr)));
    cv.line(f.left, y_mean, f.right, y_mean, kDark);
    cv.hline_dashed(f.left, f.right, static_cast<int>(std::lround(f.y_at(stats.loa_lo, yr))),
                    kRed);
    cv.hline_dashed(f.left, f.right, static_cast<int>(std::lround(f.y_at(stats.loa_hi, yr))),
                    kRed);

    for (std::size_t i = 0; i < xs.size(); ++i) {
        cv.marker(static_cast<int>(std::lround(f.x_at(xs[i], xr))),
                  static_cast<int>(std::lround(f.y_at(ys[i], yr))), kBlue);
    }
    return std::move(cv.img);
}

image_io::ImageU8 render_overlay(const std::vector<double>& predicted,
                                 const std::vector<double>& reference, double fs) {
    require(fs > 0, "plot.BadTrace", "sampling rate must be positive");
    require(predicted.size() >= 2 && predicted.size() == reference.size(), "plot.BadTrace",
            "need two equal-length traces of at least 2 samples");
    const std::vector<double> p = standardized(predicted);
    const std::vector<double> r = standardized(reference);
    std::vector<double> t(p.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / fs;

    Canvas cv(900, 420);
    const Frame f{70, 850, 36, 360};
    Range xr = span_of(t);
    Range yr = span_of(p);
    const Range yr2 = span_of(r);
    yr.lo = std::min(yr.lo, yr2.lo);
    yr.hi = std::max(yr.hi, yr2.hi);
    yr.pad();

    draw_frame(cv, f, xr, yr, "PULSE TRACE", "SECONDS", "STANDARDIZED BVP");
    polyline(cv, f, xr, yr, t, r, kDark);
    polyline(cv, f, xr, yr, t, p, kRed);

    cv.marker(f.left + 12, f.top + 12, kRed);
    cv.text(f.left + 20, f.top + 9, "PREDICTED", kText);
    cv.marker(f.left + 100, f.top + 12, kDark);
    cv.text(f.left + 108, f.top + 9, "REFERENCE", kText);
    return std::move(cv.img);
}

}  // namespace pulsebench::plot
