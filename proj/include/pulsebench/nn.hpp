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
#include <cstring>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/tensor.hpp"

// Dense primitives for the two extractor branches. Everything here is plain
// loops structured so the compiler vectorizes the innermost lane blocks; the
// iteration order is fixed, so results are bitwise reproducible run-to-run.
// Backward functions accumulate (+=) into weight gradients and assign data
// gradients, matching the per-batch accumulation in the trainer.

namespace pulsebench::nn {

// ---------------------------------------------------------------------------
// padding helpers

/// Zero-pad a C x T x H x W tensor by 1 in T, H and W.
template <typename T>
std::vector<T> pad3d_1(const T* in, int c, int t, int h, int w) {
    const int tp = t + 2, hp = h + 2, wp = w + 2;
    std::vector<T> out(static_cast<std::size_t>(c) * tp * hp * wp, T(0));
    for (int ci = 0; ci < c; ++ci)
        for (int ti = 0; ti < t; ++ti)
            for (int yi = 0; yi < h; ++yi) {
                const T* src = in + ((static_cast<std::size_t>(ci) * t + ti) * h + yi) * w;
                T* dst = out.data() +
                         ((static_cast<std::size_t>(ci) * tp + ti + 1) * hp + yi + 1) * wp + 1;
                std::memcpy(dst, src, sizeof(T) * static_cast<std::size_t>(w));
            }
    return out;
}

/// Zero-pad a C x H x W tensor by 1 in H and W.
template <typename T>
std::vector<T> pad2d_1(const T* in, int c, int h, int w) {
    const int hp = h + 2, wp = w + 2;
    std::vector<T> out(static_cast<std::size_t>(c) * hp * wp, T(0));
    for (int ci = 0; ci < c; ++ci)
        for (int yi = 0; yi < h; ++yi) {
            const T* src = in + (static_cast<std::size_t>(ci) * h + yi) * w;
            T* dst = out.data() + (static_cast<std::size_t>(ci) * hp + yi + 1) * wp + 1;
            std::memcpy(dst, src, sizeof(T) * static_cast<std::size_t>(w));
        }
    return out;
}

// ---------------------------------------------------------------------------
// 3x3x3 convolution, stride 1, padding 1 (shape preserving)

namespace detail {

/// Core correlation: out[co,t,y,x] = bias[co] +
///   sum_{ci,dt,dy,dx} w[co,ci,dt,dy,dx] * pad[ci,t+dt,y+dy,x+dx].
/// Output channels are processed in pairs and x in lane blocks so the inner
/// loop stays in registers.
template <typename T, int VB>
void conv3x3x3_block(const T* __restrict pad, int cin, int tn, int hn, int wn,
                     const T* __restrict w, const T* bias, int cout, T* __restrict out) {
    const int hp = hn + 2, wp = wn + 2;
    const std::size_t plane = static_cast<std::size_t>(hp) * wp;
    const std::size_t cstride = static_cast<std::size_t>(tn + 2) * plane;
    const std::size_t ostride = static_cast<std::size_t>(tn) * hn * wn;

    for (int co = 0; co < cout; co += 2) {
        const bool pair = co + 1 < cout;
        const T* w0 = w + static_cast<std::size_t>(co) * cin * 27;
        const T* w1 = pair ? w0 + static_cast<std::size_t>(cin) * 27 : w0;
        const T b0 = bias ? bias[co] : T(0);
        const T b1 = bias && pair ? bias[co + 1] : T(0);
        T* o0 = out + co * ostride;
        T* o1 = out + (co + (pair ? 1 : 0)) * ostride;

        for (int t = 0; t < tn; ++t)
            for (int y = 0; y < hn; ++y) {
                const std::size_t row_off = (static_cast<std::size_t>(t) * hn + y) * wn;
                for (int xb = 0; xb < wn; xb += VB) {
                    T a0[VB], a1[VB];
                    for (int l = 0; l < VB; ++l) a0[l] = b0;
                    for (int l = 0; l < VB; ++l) a1[l] = b1;
                    for (int ci = 0; ci < cin; ++ci) {
                        const T* pbase = pad + ci * cstride + static_cast<std::size_t>(t) * plane +
                                         static_cast<std::size_t>(y) * wp + xb;
                        const T* k0 = w0 + ci * 27;
                        const T* k1 = w1 + ci * 27;
                        for (int dt = 0; dt < 3; ++dt)
                            for (int dy = 0; dy < 3; ++dy) {
                                const T* __restrict row = pbase + dt * plane + dy * wp;
                                const T* kk0 = k0 + (dt * 3 + dy) * 3;
                                const T* kk1 = k1 + (dt * 3 + dy) * 3;
                                const T c00 = kk0[0], c01 = kk0[1], c02 = kk0[2];
                                const T c10 = kk1[0], c11 = kk1[1], c12 = kk1[2];
                                for (int l = 0; l < VB; ++l) {
                                    const T r0 = row[l], r1 = row[l + 1], r2 = row[l + 2];
                                    a0[l] += c00 * r0 + c01 * r1 + c02 * r2;
                                    a1[l] += c10 * r0 + c11 * r1 + c12 * r2;
                                }
                            }
                    }
                    for (int l = 0; l < VB; ++l) o0[row_off + xb + l] = a0[l];
                    if (pair)
                        for (int l = 0; l < VB; ++l) o1[row_off + xb + l] = a1[l];
                }
            }
    }
}

template <typename T>
void conv3x3x3_core(const T* pad, int cin, int tn, int hn, int wn, const T* w, const T* bias,
                    int cout, T* out) {
    if (wn % 16 == 0)
        conv3x3x3_block<T, 16>(pad, cin, tn, hn, wn, w, bias, cout, out);
    else if (wn % 8 == 0)
        conv3x3x3_block<T, 8>(pad, cin, tn, hn, wn, w, bias, cout, out);
    else if (wn % 4 == 0)
        conv3x3x3_block<T, 4>(pad, cin, tn, hn, wn, w, bias, cout, out);
    else
        conv3x3x3_block<T, 1>(pad, cin, tn, hn, wn, w, bias, cout, out);
}

/// taps[dx] = sum over rows of <d row, p row shifted by dx>, dx in {0,1,2}.
/// d rows have stride wn within an hn x wn plane and plane stride hn*wn;
/// p rows have stride wp and plane stride `plane`.
template <typename T, int VB>
void corr3_rows_block(const T* d, const T* p, int tn, int hn, int wn, int wp, std::size_t plane,
                      T taps[3]) {
    T a0[VB] = {}, a1[VB] = {}, a2[VB] = {};
    T b0[VB] = {}, b1[VB] = {}, b2[VB] = {};
    for (int t = 0; t < tn; ++t) {
        const T* dplane = d + static_cast<std::size_t>(t) * hn * wn;
        const T* pplane = p + static_cast<std::size_t>(t) * plane;
        int y = 0;
        for (; y + 1 < hn; y += 2) {
            const T* __restrict d0 = dplane + static_cast<std::size_t>(y) * wn;
            const T* __restrict d1 = d0 + wn;
            const T* __restrict p0 = pplane + static_cast<std::size_t>(y) * wp;
            const T* __restrict p1 = p0 + wp;
            for (int xb = 0; xb < wn; xb += VB)
                for (int l = 0; l < VB; ++l) {
                    const T dv0 = d0[xb + l], dv1 = d1[xb + l];
                    a0[l] += dv0 * p0[xb + l];
                    a1[l] += dv0 * p0[xb + l + 1];
                    a2[l] += dv0 * p0[xb + l + 2];
                    b0[l] += dv1 * p1[xb + l];
                    b1[l] += dv1 * p1[xb + l + 1];
                    b2[l] += dv1 * p1[xb + l + 2];
                }
        }
        for (; y < hn; ++y) {
            const T* __restrict d0 = dplane + static_cast<std::size_t>(y) * wn;
            const T* __restrict p0 = pplane + static_cast<std::size_t>(y) * wp;
            for (int xb = 0; xb < wn; xb += VB)
                for (int l = 0; l < VB; ++l) {
                    const T dv = d0[xb + l];
                    a0[l] += dv * p0[xb + l];
                    a1[l] += dv * p0[xb + l + 1];
                    a2[l] += dv * p0[xb + l + 2];
                }
        }
    }
    T s0 = 0, s1 = 0, s2 = 0;
    for (int l = 0; l < VB; ++l) {
        s0 += a0[l] + b0[l];
        s1 += a1[l] + b1[l];
        s2 += a2[l] + b2[l];
    }
    taps[0] = s0;
    taps[1] = s1;
    taps[2] = s2;
}

template <typename T>
void corr3_rows(const T* d, const T* p, int tn, int hn, int wn, int wp, std::size_t plane, int vb,
                T taps[3]) {
    if (vb == 16)
        corr3_rows_block<T, 16>(d, p, tn, hn, wn, wp, plane, taps);
    else if (vb == 8)
        corr3_rows_block<T, 8>(d, p, tn, hn, wn, wp, plane, taps);
    else if (vb == 4)
        corr3_rows_block<T, 4>(d, p, tn, hn, wn, wp, plane, taps);
    else
        corr3_rows_block<T, 1>(d, p, tn, hn, wn, wp, plane, taps);
}

}  // namespace detail

/// in: Cin x T x H x W, w: Cout x Cin x 3 x 3 x 3, b: Cout (empty = no bias).
template <typename T>
Tensor<T> conv3d(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b) {
    require(in.rank() == 4, "nn.ShapeError", "conv3d input must be rank 4");
    require(w.rank() == 5 && w.dim(2) == 3 && w.dim(3) == 3 && w.dim(4) == 3, "nn.ShapeError",
            "conv3d kernel must be Cout x Cin x 3 x 3 x 3");
    require(w.dim(1) == in.dim(0), "nn.ShapeError", "conv3d channel mismatch");
    const int cin = in.dim(0), tn = in.dim(1), hn = in.dim(2), wn = in.dim(3);
    const int cout = w.dim(0);
    auto pad = pad3d_1(in.data(), cin, tn, hn, wn);
    Tensor<T> out({cout, tn, hn, wn});
    detail::conv3x3x3_core(pad.data(), cin, tn, hn, wn, w.data(), b.empty() ? nullptr : b.data(),
                           cout, out.data());
    return out;
}

/// Accumulates dw/db, assigns din (pass nullptr-like empty din to skip input grads).
template <typename T>
void conv3d_backward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout,
                     Tensor<T>* din, Tensor<T>& dw, Tensor<T>& db) {
    const int cin = in.dim(0), tn = in.dim(1), hn = in.dim(2), wn = in.dim(3);
    const int cout = w.dim(0);
    dout.check_same_shape(Tensor<T>({cout, tn, hn, wn}));

    // din = conv(pad(dout), w transposed+flipped)
    if (din) {
        std::vector<T> wt(static_cast<std::size_t>(cin) * cout * 27);
        for (int co = 0; co < cout; ++co)
            for (int ci = 0; ci < cin; ++ci)
                for (int k = 0; k < 27; ++k)
                    wt[(static_cast<std::size_t>(ci) * cout + co) * 27 + (26 - k)] =
                        w[(static_cast<std::size_t>(co) * cin + ci) * 27 + k];
        auto dpad = pad3d_1(dout.data(), cout, tn, hn, wn);
        *din = Tensor<T>({cin, tn, hn, wn});
        detail::conv3x3x3_core(dpad.data(), cout, tn, hn, wn, wt.data(),
                               static_cast<const T*>(nullptr), cin, din->data());
    }

    // dw[co,ci,dt,dy,dx] += sum_{t,y,x} dout[co,t,y,x] * pad[ci,t+dt,y+dy,x+dx]
    // Rows are consumed in pairs with separate accumulator banks so the FMA
    // chains stay independent.
    auto pad = pad3d_1(in.data(), cin, tn, hn, wn);
    const int hp = hn + 2, wp = wn + 2;
    const std::size_t plane = static_cast<std::size_t>(hp) * wp;
    const std::size_t cstride = static_cast<std::size_t>(tn + 2) * plane;
    const int vb = wn % 16 == 0 ? 16 : (wn % 8 == 0 ? 8 : (wn % 4 == 0 ? 4 : 1));
    for (int co = 0; co < cout; ++co) {
        const T* dbase = dout.data() + static_cast<std::size_t>(co) * tn * hn * wn;
        for (int ci = 0; ci < cin; ++ci) {
            const T* pbase = pad.data() + ci * cstride;
            for (int dt = 0; dt < 3; ++dt)
                for (int dy = 0; dy < 3; ++dy) {
                    T taps[3];
                    detail::corr3_rows(dbase, pbase + dt * plane + dy * wp, tn, hn, wn, wp, plane,
                                       vb, taps);
                    T* dwp = dw.data() + ((static_cast<std::size_t>(co) * cin + ci) * 27 +
                                          (dt * 3 + dy) * 3);
                    dwp[0] += taps[0];
                    dwp[1] += taps[1];
                    dwp[2] += taps[2];
                }
        }
        if (!db.empty()) {
            T s = 0;
            const std::size_t n = static_cast<std::size_t>(tn) * hn * wn;
            for (std::size_t i = 0; i < n; ++i) s += dbase[i];
            db[co] += s;
        }
    }
}

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, padding 1

namespace detail {

template <typename T>
void conv3x3_core(const T* __restrict pad, int cin, int hn, int wn, const T* __restrict w,
                  const T* bias, int cout, T* __restrict out) {
    const int wp = wn + 2;
    const std::size_t cstride = static_cast<std::size_t>(hn + 2) * wp;
    std::vector<T> acc(static_cast<std::size_t>(wn));
    for (int co = 0; co < cout; ++co) {
        const T* wc = w + static_cast<std::size_t>(co) * cin * 9;
        T* oc = out + static_cast<std::size_t>(co) * hn * wn;
        for (int y = 0; y < hn; ++y) {
            T* __restrict a = acc.data();
            const T b = bias ? bias[co] : T(0);
            for (int x = 0; x < wn; ++x) a[x] = b;
            for (int ci = 0; ci < cin; ++ci) {
                const T* k = wc + ci * 9;
                for (int dy = 0; dy < 3; ++dy) {
                    const T* __restrict row =
                        pad + ci * cstride + (static_cast<std::size_t>(y) + dy) * wp;
                    const T c0 = k[dy * 3], c1 = k[dy * 3 + 1], c2 = k[dy * 3 + 2];
                    for (int x = 0; x < wn; ++x)
                        a[x] += c0 * row[x] + c1 * row[x + 1] + c2 * row[x + 2];
                }
            }
            std::memcpy(oc + static_cast<std::size_t>(y) * wn, a,
                        sizeof(T) * static_cast<std::size_t>(wn));
        }
    }
}

}  // namespace detail

/// in: Cin x H x W, w: Cout x Cin x 3 x 3, b: Cout (empty = no bias).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b) {
    require(in.rank() == 3, "nn.ShapeError", "conv2d input must be rank 3");
    require(w.rank() == 4 && w.dim(2) == 3 && w.dim(3) == 3, "nn.ShapeError",
            "conv2d kernel must be Cout x Cin x 3 x 3");
    require(w.dim(1) == in.dim(0), "nn.ShapeError", "conv2d channel mismatch");
    const int cin = in.dim(0), hn = in.dim(1), wn = in.dim(2);
    const int cout = w.dim(0);
    auto pad = pad2d_1(in.data(), cin, hn, wn);
    Tensor<T> out({cout, hn, wn});
    detail::conv3x3_core(pad.data(), cin, hn, wn, w.data(), b.empty() ? nullptr : b.data(), cout,
                         out.data());
    return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout,
                     Tensor<T>* din, Tensor<T>& dw, Tensor<T>& db) {
    const int cin = in.dim(0), hn = in.dim(1), wn = in.dim(2);
    const int cout = w.dim(0);
    dout.check_same_shape(Tensor<T>({cout, hn, wn}));

    if (din) {
        std::vector<T> wt(static_cast<std::size_t>(cin) * cout * 9);
        for (int co = 0; co < cout; ++co)
            for (int ci = 0; ci < cin; ++ci)
                for (int k = 0; k < 9; ++k)
                    wt[(static_cast<std::size_t>(ci) * cout + co) * 9 + (8 - k)] =
                        w[(static_cast<std::size_t>(co) * cin + ci) * 9 + k];
        auto dpad = pad2d_1(dout.data(), cout, hn, wn);
        *din = Tensor<T>({cin, hn, wn});
        detail::conv3x3_core(dpad.data(), cout, hn, wn, wt.data(), static_cast<const T*>(nullptr),
                             cin, din->data());
    }

    auto pad = pad2d_1(in.data(), cin, hn, wn);
    const int wp = wn + 2;
    const std::size_t cstride = static_cast<std::size_t>(hn + 2) * wp;
    const int vb = wn % 16 == 0 ? 16 : (wn % 8 == 0 ? 8 : (wn % 4 == 0 ? 4 : 1));
    for (int co = 0; co < cout; ++co) {
        const T* dbase = dout.data() + static_cast<std::size_t>(co) * hn * wn;
        for (int ci = 0; ci < cin; ++ci)
            for (int dy = 0; dy < 3; ++dy) {
                T taps[3];
                detail::corr3_rows(dbase, pad.data() + ci * cstride + dy * wp, 1, hn, wn, wp, 0,
                                   vb, taps);
                T* dwp = dw.data() + ((static_cast<std::size_t>(co) * cin + ci) * 9 + dy * 3);
                dwp[0] += taps[0];
                dwp[1] += taps[1];
                dwp[2] += taps[2];
            }
        if (!db.empty()) {
            T s = 0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(hn) * wn; ++i) s += dbase[i];
            db[co] += s;
        }
    }
}

// ---------------------------------------------------------------------------
// pooling

/// Spatial-only 1x2x2 max pooling on C x T x H x W. H and W must be even.
/// argmax records the winning corner (0..3) for the backward pass.
template <typename T>
Tensor<T> maxpool_spatial(const Tensor<T>& in, std::vector<unsigned char>& argmax) {
    const int c = in.dim(0), tn = in.dim(1), hn = in.dim(2), wn = in.dim(3);
    require(hn % 2 == 0 && wn % 2 == 0, "nn.ShapeError", "maxpool needs even spatial dims");
    Tensor<T> out({c, tn, hn / 2, wn / 2});
    argmax.assign(out.numel(), 0);
    std::size_t o = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int t = 0; t < tn; ++t)
            for (int y = 0; y < hn; y += 2) {
                const T* r0 = in.data() + ((static_cast<std::size_t>(ci) * tn + t) * hn + y) * wn;
                const T* r1 = r0 + wn;
                for (int x = 0; x < wn; x += 2, ++o) {
                    T best = r0[x];
                    unsigned char arg = 0;
                    if (r0[x + 1] > best) { best = r0[x + 1]; arg = 1; }
                    if (r1[x] > best) { best = r1[x]; arg = 2; }
                    if (r1[x + 1] > best) { best = r1[x + 1]; arg = 3; }
                    out[o] = best;
                    argmax[o] = arg;
                }
            }
    return out;
}

template <typename T>
Tensor<T> maxpool_spatial_backward(const Tensor<T>& dout, const std::vector<unsigned char>& argmax,
                                   int hn, int wn) {
    const int c = dout.dim(0), tn = dout.dim(1);
    Tensor<T> din({c, tn, hn, wn});
    std::size_t o = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int t = 0; t < tn; ++t)
            for (int y = 0; y < hn; y += 2) {
                T* r0 = din.data() + ((static_cast<std::size_t>(ci) * tn + t) * hn + y) * wn;
                T* r1 = r0 + wn;
                for (int x = 0; x < wn; x += 2, ++o) {
                    switch (argmax[o]) {
                        case 0: r0[x] += dout[o]; break;
                        case 1: r0[x + 1] += dout[o]; break;
                        case 2: r1[x] += dout[o]; break;
                        default: r1[x + 1] += dout[o]; break;
                    }
                }
            }
    return din;
}

/// 2x2 max pooling on C x H x W.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& in, std::vector<unsigned char>& argmax) {
    const int c = in.dim(0), hn = in.dim(1), wn = in.dim(2);
    require(hn % 2 == 0 && wn % 2 == 0, "nn.ShapeError", "maxpool needs even spatial dims");
    Tensor<T> out({c, hn / 2, wn / 2});
    argmax.assign(out.numel(), 0);
    std::size_t o = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < hn; y += 2) {
            const T* r0 = in.data() + (static_cast<std::size_t>(ci) * hn + y) * wn;
            const T* r1 = r0 + wn;
            for (int x = 0; x < wn; x += 2, ++o) {
                T best = r0[x];
                unsigned char arg = 0;
                if (r0[x + 1] > best) { best = r0[x + 1]; arg = 1; }
                if (r1[x] > best) { best = r1[x]; arg = 2; }
                if (r1[x + 1] > best) { best = r1[x + 1]; arg = 3; }
                out[o] = best;
                argmax[o] = arg;
            }
        }
    return out;
}

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& dout, const std::vector<unsigned char>& argmax,
                             int hn, int wn) {
    const int c = dout.dim(0);
    Tensor<T> din({c, hn, wn});
    std::size_t o = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < hn; y += 2) {
            T* r0 = din.data() + (static_cast<std::size_t>(ci) * hn + y) * wn;
            T* r1 = r0 + wn;
            for (int x = 0; x < wn; x += 2, ++o) {
                switch (argmax[o]) {
                    case 0: r0[x] += dout[o]; break;
                    case 1: r0[x + 1] += dout[o]; break;
                    case 2: r1[x] += dout[o]; break;
                    default: r1[x + 1] += dout[o]; break;
                }
            }
        }
    return din;
}

// ---------------------------------------------------------------------------
// activation: softsign x / (1 + |x|). Bounded and sigmoid shaped like tanh
// but branch-free, so the loop vectorizes.

template <typename T>
Tensor<T> softsign_forward(const Tensor<T>& in) {
    Tensor<T> out(in.shape());
    const T* __restrict src = in.data();
    T* __restrict dst = out.data();
    for (std::size_t i = 0; i < in.numel(); ++i) {
        const T x = src[i];
        dst[i] = x / (T(1) + std::abs(x));
    }
    return out;
}

/// din = dout * (1 - |out|)^2; `out` is the forward output.
template <typename T>
Tensor<T> softsign_backward(const Tensor<T>& dout, const Tensor<T>& out) {
    Tensor<T> din(dout.shape());
    const T* __restrict d = dout.data();
    const T* __restrict o = out.data();
    T* __restrict r = din.data();
    for (std::size_t i = 0; i < dout.numel(); ++i) {
        const T g = T(1) - std::abs(o[i]);
        r[i] = d[i] * g * g;
    }
    return din;
}

// ---------------------------------------------------------------------------
// pooling over whole spatial extent

/// C x T x H x W -> C x T mean over (H, W).
template <typename T>
Tensor<T> global_spatial_mean(const Tensor<T>& in) {
    const int c = in.dim(0), tn = in.dim(1);
    const std::size_t hw = static_cast<std::size_t>(in.dim(2)) * in.dim(3);
    Tensor<T> out({c, tn});
    const T inv = T(1) / static_cast<T>(hw);
    for (int ci = 0; ci < c; ++ci)
        for (int t = 0; t < tn; ++t) {
            const T* p = in.data() + (static_cast<std::size_t>(ci) * tn + t) * hw;
            T s = 0;
            for (std::size_t i = 0; i < hw; ++i) s += p[i];
            out.at2(ci, t) = s * inv;
        }
    return out;
}

template <typename T>
Tensor<T> global_spatial_mean_backward(const Tensor<T>& dout, int hn, int wn) {
    const int c = dout.dim(0), tn = dout.dim(1);
    const std::size_t hw = static_cast<std::size_t>(hn) * wn;
    Tensor<T> din({c, tn, hn, wn});
    const T inv = T(1) / static_cast<T>(hw);
    for (int ci = 0; ci < c; ++ci)
        for (int t = 0; t < tn; ++t) {
            T* p = din.data() + (static_cast<std::size_t>(ci) * tn + t) * hw;
            const T g = dout.at2(ci, t) * inv;
            for (std::size_t i = 0; i < hw; ++i) p[i] = g;
        }
    return din;
}

/// C x H x W -> C mean over (H, W).
template <typename T>
Tensor<T> global_mean_2d(const Tensor<T>& in) {
    const int c = in.dim(0);
    const std::size_t hw = static_cast<std::size_t>(in.dim(1)) * in.dim(2);
    Tensor<T> out({c});
    const T inv = T(1) / static_cast<T>(hw);
    for (int ci = 0; ci < c; ++ci) {
        const T* p = in.data() + ci * hw;
        T s = 0;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
        out[ci] = s * inv;
    }
    return out;
}

template <typename T>
Tensor<T> global_mean_2d_backward(const Tensor<T>& dout, int hn, int wn) {
    const int c = dout.dim(0);
    const std::size_t hw = static_cast<std::size_t>(hn) * wn;
    Tensor<T> din({c, hn, wn});
    const T inv = T(1) / static_cast<T>(hw);
    for (int ci = 0; ci < c; ++ci) {
        T* p = din.data() + ci * hw;
        for (std::size_t i = 0; i < hw; ++i) p[i] = dout[ci] * inv;
    }
    return din;
}

// ---------------------------------------------------------------------------
// linear layer

/// y = W x + b with W: K x C.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    const int k = w.dim(0), c = w.dim(1);
    require(x.dim(0) == c, "nn.ShapeError", "linear input size mismatch");
    Tensor<T> y({k});
    for (int i = 0; i < k; ++i) {
        T s = b.empty() ? T(0) : b[i];
        const T* row = w.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dw, Tensor<T>& db) {
    const int k = w.dim(0), c = w.dim(1);
    if (dx) {
        *dx = Tensor<T>({c});
        for (int j = 0; j < c; ++j) {
            T s = 0;
            for (int i = 0; i < k; ++i) s += w.data()[static_cast<std::size_t>(i) * c + j] * dy[i];
            (*dx)[j] = s;
        }
    }
    for (int i = 0; i < k; ++i) {
        T* row = dw.data() + static_cast<std::size_t>(i) * c;
        const T g = dy[i];
        for (int j = 0; j < c; ++j) row[j] += g * x[j];
        if (!db.empty()) db[i] += g;
    }
}

// ---------------------------------------------------------------------------
// pointwise (1x1x1) channel-mixing convolution

/// in: Cin x T x H x W, w: Cout x Cin -> out: Cout x T x H x W. No bias.
template <typename T>
Tensor<T> pointwise_conv(const Tensor<T>& in, const Tensor<T>& w) {
    const int cin = in.dim(0), cout = w.dim(0);
    require(w.dim(1) == cin, "nn.ShapeError", "pointwise channel mismatch");
    const std::size_t n = in.numel() / static_cast<std::size_t>(cin);
    std::vector<int> oshape = in.shape();
    oshape[0] = cout;
    Tensor<T> out(oshape);
    for (int co = 0; co < cout; ++co) {
        T* __restrict o = out.data() + co * n;
        for (int ci = 0; ci < cin; ++ci) {
            const T c = w.at2(co, ci);
            const T* __restrict p = in.data() + ci * n;
            if (ci == 0)
                for (std::size_t i = 0; i < n; ++i) o[i] = c * p[i];
            else
                for (std::size_t i = 0; i < n; ++i) o[i] += c * p[i];
        }
    }
    return out;
}

template <typename T>
void pointwise_conv_backward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout,
                             Tensor<T>* din, Tensor<T>& dw) {
    const int cin = in.dim(0), cout = w.dim(0);
    const std::size_t n = in.numel() / static_cast<std::size_t>(cin);
    if (din) {
        *din = Tensor<T>(in.shape());
        for (int ci = 0; ci < cin; ++ci) {
            T* __restrict o = din->data() + ci * n;
            for (int co = 0; co < cout; ++co) {
                const T c = w.at2(co, ci);
                const T* __restrict p = dout.data() + co * n;
                for (std::size_t i = 0; i < n; ++i) o[i] += c * p[i];
            }
        }
    }
    constexpr int VB = 8;
    for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci) {
            const T* __restrict d = dout.data() + co * n;
            const T* __restrict p = in.data() + ci * n;
            T lanes[VB] = {};
            const std::size_t nv = n - n % VB;
            for (std::size_t i = 0; i < nv; i += VB)
                for (int l = 0; l < VB; ++l) lanes[l] += d[i + l] * p[i + l];
            T s = 0;
            for (std::size_t i = nv; i < n; ++i) s += d[i] * p[i];
            for (int l = 0; l < VB; ++l) s += lanes[l];
            dw.at2(co, ci) += s;
        }
}

// ---------------------------------------------------------------------------
// bilinear resize (half-pixel centers, edge clamped)

/// in: C x H x W -> C x H2 x W2. Same-size resize is an exact copy.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& in, int h2, int w2) {
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    require(h2 >= 1 && w2 >= 1, "nn.ShapeError", "bilinear target must be positive");
    if (h2 == h && w2 == w) return in;
    Tensor<T> out({c, h2, w2});
    const double sy = static_cast<double>(h) / h2;
    const double sx = static_cast<double>(w) / w2;
    for (int y = 0; y < h2; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const T wy = static_cast<T>(fy - y0);
        const int y0c = std::min(std::max(y0, 0), h - 1);
        const int y1c = std::min(std::max(y0 + 1, 0), h - 1);
        for (int x = 0; x < w2; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const T wx = static_cast<T>(fx - x0);
            const int x0c = std::min(std::max(x0, 0), w - 1);
            const int x1c = std::min(std::max(x0 + 1, 0), w - 1);
            for (int ci = 0; ci < c; ++ci) {
                const T* p = in.data() + static_cast<std::size_t>(ci) * h * w;
                const T v00 = p[static_cast<std::size_t>(y0c) * w + x0c];
                const T v01 = p[static_cast<std::size_t>(y0c) * w + x1c];
                const T v10 = p[static_cast<std::size_t>(y1c) * w + x0c];
                const T v11 = p[static_cast<std::size_t>(y1c) * w + x1c];
                out.at3(ci, y, x) = (T(1) - wy) * ((T(1) - wx) * v00 + wx * v01) +
                                    wy * ((T(1) - wx) * v10 + wx * v11);
            }
        }
    }
    return out;
}

/// Transpose of bilinear_resize: scatters dout back onto the source grid.
template <typename T>
Tensor<T> bilinear_resize_backward(const Tensor<T>& dout, int h, int w) {
    const int c = dout.dim(0), h2 = dout.dim(1), w2 = dout.dim(2);
    Tensor<T> din({c, h, w});
    if (h2 == h && w2 == w) {
        din = dout;
        return din;
    }
    const double sy = static_cast<double>(h) / h2;
    const double sx = static_cast<double>(w) / w2;
    for (int y = 0; y < h2; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const T wy = static_cast<T>(fy - y0);
        const int y0c = std::min(std::max(y0, 0), h - 1);
        const int y1c = std::min(std::max(y0 + 1, 0), h - 1);
        for (int x = 0; x < w2; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const T wx = static_cast<T>(fx - x0);
            const int x0c = std::min(std::max(x0, 0), w - 1);
            const int x1c = std::min(std::max(x0 + 1, 0), w - 1);
            for (int ci = 0; ci < c; ++ci) {
                T* p = din.data() + static_cast<std::size_t>(ci) * h * w;
                const T g = dout.at3(ci, y, x);
                p[static_cast<std::size_t>(y0c) * w + x0c] += (T(1) - wy) * (T(1) - wx) * g;
                p[static_cast<std::size_t>(y0c) * w + x1c] += (T(1) - wy) * wx * g;
                p[static_cast<std::size_t>(y1c) * w + x0c] += wy * (T(1) - wx) * g;
                p[static_cast<std::size_t>(y1c) * w + x1c] += wy * wx * g;
            }
        }
    }
    return din;
}

}  // namespace pulsebench::nn
