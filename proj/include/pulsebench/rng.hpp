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
#include <cstdint>

namespace pulsebench {

/// Deterministic RNG (splitmix64 core). All distribution transforms are
/// implemented here rather than through std:: distributions so that streams
/// are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift rejection-free mapping; bias is negligible for n << 2^64
        // and, more importantly, the stream is deterministic.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller (always consumes two draws).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    /// Derive an independent child stream; used to give records/identities
    /// their own reproducible streams regardless of generation order.
    Rng fork(std::uint64_t tag) {
        Rng child(state_ ^ (0xa0761d6478bd642fULL * (tag + 1)));
        child.next_u64();
        return child;
    }

    /// Fisher-Yates shuffle.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace pulsebench
