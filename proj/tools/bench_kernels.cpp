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

// Micro benchmark for the convolution kernels. Prints sustained GFLOP/s for
// the shapes the extractor actually runs, so training-time budgets can be
// sanity checked on a new machine.

#include <chrono>
#include <cstdio>

#include "pulsebench/nn.hpp"
#include "pulsebench/rng.hpp"

using pulsebench::Rng;
using pulsebench::TensorF;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Shape {
    const char* name;
    int cin, cout, t, h, w;
};

void bench_conv(const Shape& s, int iters) {
    Rng rng(7);
    TensorF in({s.cin, s.t, s.h, s.w});
    TensorF w({s.cout, s.cin, 3, 3, 3});
    TensorF b({s.cout});
    in.fill_normal(rng, 0.0, 1.0);
    w.fill_normal(rng, 0.0, 0.1);
    b.fill_normal(rng, 0.0, 0.1);

    auto out = pulsebench::nn::conv3d(in, w, b);  // warm up
    double t0 = now_s();
    float sink = 0.f;
    for (int i = 0; i < iters; ++i) {
        out = pulsebench::nn::conv3d(in, w, b);
        sink += out[0];
    }
    double fwd = (now_s() - t0) / iters;

    TensorF dout(out.shape());
    dout.fill_normal(rng, 0.0, 1.0);
    TensorF din, dw(w.shape()), db(b.shape());
    pulsebench::nn::conv3d_backward(in, w, dout, &din, dw, db);
    t0 = now_s();
    for (int i = 0; i < iters; ++i) {
        dw.fill(0.f);
        db.fill(0.f);
        pulsebench::nn::conv3d_backward(in, w, dout, &din, dw, db);
        sink += din[0];
    }
    double bwd = (now_s() - t0) / iters;

    const double macs = 2.0 * s.cout * s.cin * 27.0 * s.t * s.h * s.w;
    std::printf("%-28s fwd %7.1f ms %6.1f GF/s   bwd %7.1f ms %6.1f GF/s   (sink %g)\n",
                s.name, fwd * 1e3, macs / fwd * 1e-9, bwd * 1e3, 2.0 * macs / bwd * 1e-9,
                static_cast<double>(sink));
}

void bench_softsign(std::size_t n, int iters) {
    Rng rng(9);
    TensorF in({static_cast<int>(n)});
    in.fill_normal(rng, 0.0, 1.0);
    auto out = pulsebench::nn::softsign_forward(in);
    double t0 = now_s();
    float sink = 0.f;
    for (int i = 0; i < iters; ++i) {
        out = pulsebench::nn::softsign_forward(in);
        sink += out[0];
    }
    double sec = (now_s() - t0) / iters;
    std::printf("softsign %zu elems: %7.2f ms (%5.1f M/s)  (sink %g)\n", n, sec * 1e3,
                n / sec * 1e-6, static_cast<double>(sink));
}

}  // namespace

int main(int argc, char** argv) {
    int iters = argc > 1 ? std::atoi(argv[1]) : 5;
    const Shape shapes[] = {
        {"stage1 3->16  64x32x32", 3, 16, 64, 32, 32},
        {"stage1 16->16 64x32x32", 16, 16, 64, 32, 32},
        {"stage2 16->32 64x16x16", 16, 32, 64, 16, 16},
        {"stage2 32->32 64x16x16", 32, 32, 64, 16, 16},
        {"stage3 32->64 64x8x8", 32, 64, 64, 8, 8},
        {"stage3 64->64 64x8x8", 64, 64, 64, 8, 8},
    };
    double total_fwd_macs = 0;
    for (const auto& s : shapes) {
        bench_conv(s, iters);
        total_fwd_macs += 2.0 * s.cout * s.cin * 27.0 * s.t * s.h * s.w;
    }
    std::printf("one clip, all 3d convs: %.2f GFLOP fwd (x3 for a training step)\n",
                total_fwd_macs * 1e-9);
    bench_softsign(static_cast<std::size_t>(16) * 64 * 32 * 32, iters);
    return 0;
}
