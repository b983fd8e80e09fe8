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

#include <algorithm>
#include <cmath>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/spectral.hpp"
#include "pulsebench/tensor.hpp"

// Multi-task likelihood loss with learnable per-task uncertainties. Each task
// carries a weight exp(-s_i) = 1 / sigma_i^2 and a log sigma_i regularizer,
// so the optimizer balances waveform regression, frequency regression, and
// identity classification without manual scale tuning.

namespace pulsebench::loss {

template <typename T>
struct LossTerms {
    T total = 0;
    T bvp_term = 0;  // weighted waveform residual plus its log sigma
    T hr_term = 0;   // weighted frequency residual plus its log sigma
    T id_term = 0;   // weighted cross entropy plus its log sigma
    T hr_estimate = 0;  // differentiable spectral readout of the prediction, bpm
    T ce = 0;           // unweighted cross entropy
};

template <typename T>
struct LossGrads {
    Tensor<T> d_bvp;     // dL / d bvp_pred
    Tensor<T> d_logits;  // dL / d id_logits
    T ds1 = 0, ds2 = 0, ds3 = 0;
};

/// total = (1/(2 sigma1^2)) ||bvp_gt - bvp_pred||^2 + log sigma1
///       + (1/(2 sigma2^2)) (hr_gt - soft_hr(bvp_pred))^2 + log sigma2
///       + (1/sigma3^2) CE(id_logits, id_gt) + log sigma3
/// with sigma_i = exp(s_i / 2). Pass grads to also receive the full gradient.
template <typename T>
LossTerms<T> multitask_loss(const Tensor<T>& bvp_pred, const Tensor<T>& bvp_gt, double hr_gt,
                            const Tensor<T>& id_logits, int id_gt, T s1, T s2, T s3, double fs,
                            const spectral::HrBand& band, double temperature,
                            LossGrads<T>* grads = nullptr) {
    require(bvp_pred.rank() == 1 && bvp_gt.rank() == 1 && bvp_pred.numel() == bvp_gt.numel(),
            "loss.ShapeError", "bvp series must be equal-length vectors");
    require(id_logits.rank() == 1 && id_logits.dim(0) >= 2, "loss.ShapeError",
            "need at least two identity logits");
    const int n = bvp_pred.dim(0);
    const int k = id_logits.dim(0);
    require(id_gt >= 0 && id_gt < k, "loss.InvalidClass", "identity label out of range");

    const T inv_var1 = std::exp(-s1);
    const T inv_var2 = std::exp(-s2);
    const T inv_var3 = std::exp(-s3);

    T sq = 0;
    for (int t = 0; t < n; ++t) {
        const T e = bvp_gt[t] - bvp_pred[t];
        sq += e * e;
    }

    std::vector<T> hr_grad(n);
    const T hr_hat =
        spectral::soft_hr_grad(bvp_pred.data(), n, fs, band, temperature, hr_grad.data());
    const T hr_res = static_cast<T>(hr_gt) - hr_hat;

    T lmax = id_logits[0];
    for (int i = 1; i < k; ++i) lmax = std::max(lmax, id_logits[i]);
    T z = 0;
    for (int i = 0; i < k; ++i) z += std::exp(id_logits[i] - lmax);
    const T log_z = std::log(z) + lmax;
    const T ce = log_z - id_logits[id_gt];

    LossTerms<T> out;
    out.bvp_term = T(0.5) * inv_var1 * sq + T(0.5) * s1;
    out.hr_term = T(0.5) * inv_var2 * hr_res * hr_res + T(0.5) * s2;
    out.id_term = inv_var3 * ce + T(0.5) * s3;
    out.total = out.bvp_term + out.hr_term + out.id_term;
    out.hr_estimate = hr_hat;
    out.ce = ce;

    if (grads) {
        grads->d_bvp = Tensor<T>({n});
        for (int t = 0; t < n; ++t) {
            const T e = bvp_gt[t] - bvp_pred[t];
            grads->d_bvp[t] = -inv_var1 * e - inv_var2 * hr_res * hr_grad[t];
        }
        grads->d_logits = Tensor<T>({k});
        for (int i = 0; i < k; ++i) {
            const T p = std::exp(id_logits[i] - log_z);
            grads->d_logits[i] = inv_var3 * (p - (i == id_gt ? T(1) : T(0)));
        }
        grads->ds1 = T(-0.5) * inv_var1 * sq + T(0.5);
        grads->ds2 = T(-0.5) * inv_var2 * hr_res * hr_res + T(0.5);
        grads->ds3 = -inv_var3 * ce + T(0.5);
    }
    return out;
}

/// Closed-form minimizer of r/(2 sigma^2) + (1/2) log sigma^2 over sigma^2;
/// a test oracle for the uncertainty parametrization.
double optimal_sigma_check(double residual_sq);

}  // namespace pulsebench::loss
