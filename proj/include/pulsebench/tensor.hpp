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

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pulsebench/errors.hpp"
#include "pulsebench/rng.hpp"

namespace pulsebench {

/// Dense row-major tensor of rank <= 4. The last dimension is contiguous.
/// Feature maps use C x H x W (spatial) and C x T x H x W (spatio-temporal);
/// raw clips use T x C x H x W.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(numel_of(shape_), T(0));
    }

    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    static Tensor full(std::vector<int> shape, T value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at2(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    const T& at2(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }

    T& at3(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    const T& at3(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }

    T& at4(int i, int j, int k, int l) {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    const T& at4(int i, int j, int k, int l) const {
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    void add_scaled(const Tensor& other, T scale) {
        check_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
    }

    void scale(T s) {
        for (auto& v : data_) v *= s;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void check_same_shape(const Tensor& other) const {
        if (shape_ != other.shape_)
            fail("tensor.ShapeError",
                 "shape mismatch: " + shape_string() + " vs " + other.shape_string());
    }

    std::string shape_string() const {
        std::ostringstream os;
        os << "(";
        for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
        os << ")";
        return os.str();
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    void fill_uniform(Rng& rng, double lo, double hi) {
        for (auto& v : data_) v = static_cast<T>(rng.uniform(lo, hi));
    }

    void fill_normal(Rng& rng, double mean, double std) {
        for (auto& v : data_) v = static_cast<T>(rng.normal(mean, std));
    }

    static std::size_t numel_of(const std::vector<int>& shape) {
        std::size_t n = shape.empty() ? 0 : 1;
        for (int d : shape) {
            if (d < 0) fail("tensor.ShapeError", "negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

private:
    std::vector<int> shape_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace pulsebench
