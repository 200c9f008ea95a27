// Copyright 2026 The isim-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "isimforge/dataset.hpp"

namespace isimforge {

struct Layout;

// Gray level of class m among M classes: floor(255 * m / M), evaluated in
// integers. Throws InvalidInput unless 1 <= m <= M <= 255.
std::uint8_t gray_value(ClassId m, std::size_t class_count);

// All M gray levels, index m - 1.
std::vector<std::uint8_t> gray_table(std::size_t class_count);

// Inverse of gray_value for one M: class of each byte value, 0 when the
// value is background or not in the table.
class GrayLookup {
 public:
  explicit GrayLookup(std::size_t class_count);

  ClassId class_of(std::uint8_t value) const noexcept { return table_[value]; }
  bool contains(std::uint8_t value) const noexcept {
    return value == 0 || table_[value] != 0;
  }

 private:
  std::uint32_t table_[256] = {};
};

// 8-bit single-channel raster, row-major, background 0.
struct IsimRaster {
  int width = 0;
  int height = 0;
  std::size_t class_count = 0;
  std::vector<std::uint8_t> pixels;

  IsimRaster() = default;
  IsimRaster(int w, int h, std::size_t m)
      : width(w), height(h), class_count(m),
        pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

// Fills each object's box with its class gray. Larger boxes are painted
// first so smaller ones stay visible; equal areas keep layout order.
IsimRaster render_isim(const Layout& layout);

struct DecodedRegion {
  ClassId class_id = 0;
  std::size_t pixel_count = 0;
  BoxPx bbox;  // tight, half-open
};

// 4-connected components of equal gray, in scanline order of each
// component's first pixel. Throws InvalidInput listing every byte value that
// is not background and not in the table for `class_count`.
std::vector<DecodedRegion> decode_isim(const IsimRaster& raster,
                                       std::size_t class_count);

// PNG codec: 8-bit grayscale, no alpha, no interlace, fixed zlib level and
// filter so identical rasters encode to identical bytes.
std::string encode_png(const IsimRaster& raster);
void write_png(const std::filesystem::path& path, const IsimRaster& raster);
// class_count is not stored in the PNG; the caller supplies it.
IsimRaster read_png(const std::filesystem::path& path, std::size_t class_count);

}  // namespace isimforge
