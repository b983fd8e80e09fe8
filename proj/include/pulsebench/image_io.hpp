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

#include <filesystem>

#include "pulsebench/tensor.hpp"

namespace pulsebench::image_io {

/// Planar 3 x H x W, 8 bits per channel.
using ImageU8 = Tensor<unsigned char>;

/// Decodes a PNG to RGB8, expanding palette/gray and stripping alpha or
/// 16-bit depth as needed. Throws image_io.ReadError.
ImageU8 read_png(const std::filesystem::path& path);

/// Writes a 3 x H x W image as an 8-bit RGB PNG with fixed encoder settings,
/// so identical pixels give identical bytes. Throws image_io.WriteError.
void write_png(const std::filesystem::path& path, const ImageU8& image);

}  // namespace pulsebench::image_io
