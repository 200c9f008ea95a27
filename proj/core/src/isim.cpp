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

#include "isimforge/isim.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <numeric>
#include <string>

#include "isimforge/canonical_json.hpp"
#include "isimforge/error.hpp"
#include "isimforge/layout.hpp"

namespace isimforge {
namespace {

constexpr int kPngCompressionLevel = 6;

void check_class_count(std::size_t class_count) {
  if (class_count == 0 || class_count > kMaxClasses) {
    throw InvalidInput("class count " + std::to_string(class_count) +
                       " outside 1..255");
  }
}

// Pixel index range covered by [lo, hi) after clipping to [0, limit).
std::pair<int, int> covered(double lo, double hi, int limit) {
  const int a = std::clamp(static_cast<int>(std::floor(lo)), 0, limit);
  const int b = std::clamp(static_cast<int>(std::ceil(hi)), 0, limit);
  return {a, b};
}

}  // namespace

std::uint8_t gray_value(ClassId m, std::size_t class_count) {
  check_class_count(class_count);
  if (m == 0) throw InvalidInput("class id 0 is reserved for background");
  if (m > class_count) {
    throw InvalidInput("class id " + std::to_string(m) + " exceeds class count " +
                       std::to_string(class_count));
  }
  return static_cast<std::uint8_t>((255u * m) / class_count);
}

std::vector<std::uint8_t> gray_table(std::size_t class_count) {
  std::vector<std::uint8_t> table(class_count);
  for (std::size_t m = 1; m <= class_count; ++m) {
    table[m - 1] = gray_value(static_cast<ClassId>(m), class_count);
  }
  return table;
}

GrayLookup::GrayLookup(std::size_t class_count) {
  for (std::size_t m = 1; m <= class_count; ++m) {
    table_[gray_value(static_cast<ClassId>(m), class_count)] =
        static_cast<std::uint32_t>(m);
  }
}

IsimRaster render_isim(const Layout& layout) {
  check_class_count(layout.class_count);
  const auto [w, h] = layout.image_size;
  IsimRaster raster(w, h, layout.class_count);

  std::vector<std::size_t> order(layout.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return layout.objects[a].bbox.area() > layout.objects[b].bbox.area();
  });

  for (std::size_t idx : order) {
    const auto& obj = layout.objects[idx];
    const std::uint8_t v = gray_value(obj.class_id, layout.class_count);
    const auto [x0, x1] = covered(obj.bbox.x_min, obj.bbox.x_max, w);
    const auto [y0, y1] = covered(obj.bbox.y_min, obj.bbox.y_max, h);
    for (int y = y0; y < y1; ++y) {
      auto* row = raster.pixels.data() + static_cast<std::size_t>(y) * w;
      std::fill(row + x0, row + x1, v);
    }
  }
  return raster;
}

std::vector<DecodedRegion> decode_isim(const IsimRaster& raster,
                                       std::size_t class_count) {
  const GrayLookup lookup(class_count);
  const int w = raster.width;
  const int h = raster.height;
  if (raster.pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw InvalidInput("raster buffer does not match its dimensions");
  }

  bool bad[256] = {};
  bool any_bad = false;
  for (std::uint8_t v : raster.pixels) {
    if (!lookup.contains(v)) bad[v] = any_bad = true;
  }
  if (any_bad) {
    std::string list;
    for (int v = 0; v < 256; ++v) {
      if (!bad[v]) continue;
      if (!list.empty()) list += ", ";
      list += std::to_string(v);
    }
    throw InvalidInput("gray values not in the table for M=" +
                       std::to_string(class_count) + ": " + list);
  }

  std::vector<DecodedRegion> regions;
  std::vector<std::uint8_t> seen(raster.pixels.size(), 0);
  std::vector<std::size_t> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * w + x;
      const std::uint8_t v = raster.pixels[start];
      if (v == 0 || seen[start]) continue;

      DecodedRegion region;
      region.class_id = lookup.class_of(v);
      int x_min = x, x_max = x, y_min = y, y_max = y;
      seen[start] = 1;
      stack.assign(1, start);
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        ++region.pixel_count;
        const int px = static_cast<int>(p % w);
        const int py = static_cast<int>(p / w);
        x_min = std::min(x_min, px);
        x_max = std::max(x_max, px);
        y_min = std::min(y_min, py);
        y_max = std::max(y_max, py);
        auto visit = [&](int nx, int ny) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          if (seen[q] || raster.pixels[q] != v) return;
          seen[q] = 1;
          stack.push_back(q);
        };
        visit(px - 1, py);
        visit(px + 1, py);
        visit(px, py - 1);
        visit(px, py + 1);
      }
      region.bbox = {static_cast<double>(x_min), static_cast<double>(y_min),
                     static_cast<double>(x_max + 1), static_cast<double>(y_max + 1)};
      regions.push_back(region);
    }
  }
  return regions;
}

namespace {

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void flush_nothing(png_structp) {}

struct ReadCursor {
  const std::string* bytes;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes->size()) png_error(png, "truncated PNG stream");
  std::copy_n(cur->bytes->data() + cur->pos, len, data);
  cur->pos += len;
}

}  // namespace

std::string encode_png(const IsimRaster& raster) {
  std::string out;
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error,
                                            png_error_handler, png_warning_handler);
  if (!png) throw IoError("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: cannot allocate info");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed: " + error);
  }
  png_set_write_fn(png, &out, append_bytes, flush_nothing);
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width),
               static_cast<png_uint_32>(raster.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, kPngCompressionLevel);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_write_info(png, info);
  for (int y = 0; y < raster.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(raster.pixels.data() +
                                             static_cast<std::size_t>(y) * raster.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const IsimRaster& raster) {
  write_file(path, encode_png(raster));
}

IsimRaster read_png(const std::filesystem::path& path, std::size_t class_count) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 8 ||
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error,
                                           png_error_handler, png_warning_handler);
  if (!png) throw IoError("png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: cannot allocate info");
  }
  IsimRaster raster;
  raster.class_count = class_count;
  ReadCursor cursor{&bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": corrupt PNG: " + error);
  }
  png_set_read_fn(png, &cursor, read_bytes);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": expected an 8-bit grayscale PNG");
  }
  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  raster.pixels.assign(static_cast<std::size_t>(raster.width) * raster.height, 0);
  for (int y = 0; y < raster.height; ++y) {
    png_read_row(png, raster.pixels.data() + static_cast<std::size_t>(y) * raster.width,
                 nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raster;
}

}  // namespace isimforge
