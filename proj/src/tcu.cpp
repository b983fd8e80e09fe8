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

#include "pulsebench/tcu.hpp"

namespace pulsebench::tcu {

template Tensor<float> compress(const Tensor<float>&);
template Tensor<double> compress(const Tensor<double>&);
template Tensor<float> compress_backward(const Tensor<float>&, int);
template Tensor<double> compress_backward(const Tensor<double>&, int);
template Tensor<float> upsample(const Tensor<float>&, int);
template Tensor<double> upsample(const Tensor<double>&, int);
template Tensor<float> upsample_backward(const Tensor<float>&, int, int);
template Tensor<double> upsample_backward(const Tensor<double>&, int, int);

}  // namespace pulsebench::tcu
