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

#include "pulsebench/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <string>
#include <vector>

#include "pulsebench/errors.hpp"

namespace pulsebench::image_io {

namespace {

struct FileCloser {
    std::FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) std::fclose(fp);
    }
};

void error_to_longjmp(png_structp png, png_const_charp /*msg*/) {
    std::longjmp(png_jmpbuf(png), 1);
}

void ignore_warning(png_structp /*png*/, png_const_charp /*msg*/) {}

}  // namespace

ImageU8 read_png(const std::filesystem::path& path) {
    FileCloser file;
    file.fp = std::fopen(path.string().c_str(), "rb");
    if (!file.fp) {
        fail("image_io.ReadError", "cannot open '" + path.string() + "' for reading");
    }

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        fail("image_io.ReadError", "'" + path.string() + "' is not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             error_to_longjmp, ignore_warning);
    if (!png) fail("image_io.ReadError", "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("image_io.ReadError", "png_create_info_struct failed");
    }

    // Everything touched after a possible longjmp lives outside the jump scope.
    std::vector<unsigned char> interleaved;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    std::size_t row_bytes = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("image_io.ReadError", "libpng failed decoding '" + path.string() + "'");
    }

    png_init_io(png, file.fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    row_bytes = png_get_rowbytes(png, info);
    interleaved.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = interleaved.data() + static_cast<std::size_t>(y) * row_bytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (row_bytes != static_cast<std::size_t>(width) * 3) {
        fail("image_io.ReadError",
             "'" + path.string() + "' did not decode to 8-bit RGB");
    }

    const int h = static_cast<int>(height);
    const int w = static_cast<int>(width);
    ImageU8 out({3, h, w});
    for (int y = 0; y < h; ++y) {
        const unsigned char* src = interleaved.data() + y * row_bytes;
        for (int x = 0; x < w; ++x) {
            out.at3(0, y, x) = src[3 * x + 0];
            out.at3(1, y, x) = src[3 * x + 1];
            out.at3(2, y, x) = src[3 * x + 2];
        }
    }
    return out;
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
    require(image.rank() == 3 && image.dim(0) == 3 && image.dim(1) > 0 &&
                image.dim(2) > 0,
            "image_io.BadImage", "expected a 3 x H x W image");

    const int h = image.dim(1);
    const int w = image.dim(2);
    std::vector<unsigned char> interleaved(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        unsigned char* dst = interleaved.data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            dst[3 * x + 0] = image.at3(0, y, x);
            dst[3 * x + 1] = image.at3(1, y, x);
            dst[3 * x + 2] = image.at3(2, y, x);
        }
    }

    FileCloser file;
    file.fp = std::fopen(path.string().c_str(), "wb");
    if (!file.fp) {
        fail("image_io.WriteError", "cannot open '" + path.string() + "' for writing");
    }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              error_to_longjmp, ignore_warning);
    if (!png) fail("image_io.WriteError", "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("image_io.WriteError", "png_create_info_struct failed");
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("image_io.WriteError", "libpng failed encoding '" + path.string() + "'");
    }

    png_init_io(png, file.fp);
    // Fixed encoder settings keep the byte stream reproducible.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w),
                 static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) {
        png_write_row(png, interleaved.data() + static_cast<std::size_t>(y) * w * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace pulsebench::image_io
