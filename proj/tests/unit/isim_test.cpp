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

#include <algorithm>
#include <set>
#include <tuple>

#include "gtest/gtest.h"
#include "isimforge/canonical_json.hpp"
#include "isimforge/error.hpp"
#include "isimforge/layout.hpp"
#include "synthetic.hpp"

namespace isimforge {
namespace {

using testing::random_separated_layout;
using testing::TempDir;

std::vector<std::string> dior_table() {
  return ClassTable::from_names(testing::dior_class_names()).names();
}

Layout layout_with(std::size_t class_count, int w, int h,
                   const std::vector<std::pair<ClassId, BoxPx>>& boxes) {
  Layout l;
  l.image_size = {w, h};
  l.class_count = class_count;
  for (std::size_t m = 1; m <= class_count; ++m) l.class_names.push_back("c" + std::to_string(m));
  for (const auto& [id, box] : boxes) {
    LayoutObject o;
    o.class_id = id;
    o.class_name = l.class_names[id - 1];
    o.bbox = box;
    l.objects.push_back(o);
  }
  return l;
}

TEST(GrayValue, HandEvaluated) {
  EXPECT_EQ(gray_value(1, 20), 12);   // floor(12.75)
  EXPECT_EQ(gray_value(20, 20), 255);
  EXPECT_EQ(gray_value(1, 255), 1);
  EXPECT_EQ(gray_value(14, 20), 178);  // floor(178.5)
  EXPECT_EQ(gray_value(1, 1), 255);
}

TEST(GrayValue, RejectsOutOfRange) {
  EXPECT_THROW(gray_value(0, 20), InvalidInput);
  EXPECT_THROW(gray_value(21, 20), InvalidInput);
  EXPECT_THROW(gray_value(1, 256), InvalidInput);
  EXPECT_THROW(gray_value(1, 0), InvalidInput);
}

TEST(GrayValue, InjectiveAndMonotoneForEveryM) {
  for (std::size_t m_count = 1; m_count <= 255; ++m_count) {
    auto table = gray_table(m_count);
    ASSERT_EQ(table.size(), m_count);
    ASSERT_GT(table.front(), 0);
    for (std::size_t i = 1; i < table.size(); ++i) ASSERT_LT(table[i - 1], table[i]);
    GrayLookup lookup(m_count);
    for (std::size_t m = 1; m <= m_count; ++m) {
      ASSERT_EQ(lookup.class_of(table[m - 1]), m);
    }
    ASSERT_TRUE(lookup.contains(0));
  }
}

TEST(RenderIsim, EmptyLayoutIsBackground) {
  auto raster = render_isim(layout_with(3, 64, 48, {}));
  EXPECT_EQ(raster.width, 64);
  EXPECT_EQ(raster.height, 48);
  EXPECT_TRUE(std::all_of(raster.pixels.begin(), raster.pixels.end(),
                          [](std::uint8_t v) { return v == 0; }));
}

TEST(RenderIsim, SingleShipRectangle) {
  auto raster = render_isim(layout_with(20, 800, 800, {{14, {100, 100, 200, 150}}}));
  std::size_t lit = 0;
  for (int y = 0; y < 800; ++y) {
    for (int x = 0; x < 800; ++x) {
      const bool inside = x >= 100 && x < 200 && y >= 100 && y < 150;
      ASSERT_EQ(raster.at(x, y), inside ? 178 : 0) << x << "," << y;
      lit += inside;
    }
  }
  EXPECT_EQ(lit, 5000u);
}

TEST(RenderIsim, SmallerBoxPaintedOnTop) {
  // Listed small-first so paint order must come from area, not list order.
  auto raster = render_isim(layout_with(2, 100, 100, {{2, {40, 40, 50, 50}}, {1, {0, 0, 100, 100}}}));
  EXPECT_EQ(raster.at(45, 45), gray_value(2, 2));
  EXPECT_EQ(raster.at(39, 45), gray_value(1, 2));
  EXPECT_EQ(raster.at(50, 50), gray_value(1, 2));
}

TEST(RenderIsim, MatchesPerPixelReferencePainter) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m_count = 1 + rng.below(8);
    const int w = 8 + static_cast<int>(rng.below(40));
    const int h = 8 + static_cast<int>(rng.below(40));
    std::vector<std::pair<ClassId, BoxPx>> boxes;
    const std::size_t n = rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x0 = static_cast<double>(rng.below(w - 2));
      const auto y0 = static_cast<double>(rng.below(h - 2));
      const auto x1 = x0 + 2 + static_cast<double>(rng.below(static_cast<std::uint64_t>(w - x0 - 1)));
      const auto y1 = y0 + 2 + static_cast<double>(rng.below(static_cast<std::uint64_t>(h - y0 - 1)));
      boxes.push_back({static_cast<ClassId>(1 + rng.below(m_count)), {x0, y0, x1, y1}});
    }
    auto raster = render_isim(layout_with(m_count, w, h, boxes));
    // Reference: a pixel shows the smallest covering box; among equal areas
    // the one listed last (it is painted last).
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::uint8_t expect = 0;
        double best = 0.0;
        for (const auto& [id, b] : boxes) {
          if (x < b.x_min || x >= b.x_max || y < b.y_min || y >= b.y_max) continue;
          if (expect == 0 || b.area() <= best) {
            best = b.area();
            expect = gray_value(id, m_count);
          }
        }
        ASSERT_EQ(raster.at(x, y), expect) << "trial " << trial << " at " << x << "," << y;
      }
    }
  }
}

std::multiset<std::tuple<ClassId, double, double, double, double>> class_boxes(
    const std::vector<std::pair<ClassId, BoxPx>>& v) {
  std::multiset<std::tuple<ClassId, double, double, double, double>> out;
  for (const auto& [id, b] : v) out.insert({id, b.x_min, b.y_min, b.x_max, b.y_max});
  return out;
}

TEST(DecodeIsim, RoundTripOnSeparatedLayouts) {
  Rng rng(7);
  const auto names = dior_table();
  for (int trial = 0; trial < 100; ++trial) {
    auto layout = random_separated_layout(rng, names, {800, 800}, 60);
    std::vector<std::pair<ClassId, BoxPx>> expect;
    for (const auto& o : layout.objects) expect.push_back({o.class_id, o.bbox});
    std::vector<std::pair<ClassId, BoxPx>> got;
    for (const auto& r : decode_isim(render_isim(layout), 20)) {
      EXPECT_EQ(r.pixel_count, static_cast<std::size_t>(r.bbox.area()));
      got.push_back({r.class_id, r.bbox});
    }
    ASSERT_EQ(class_boxes(got), class_boxes(expect)) << "trial " << trial;
  }
}

TEST(DecodeIsim, AllZeroRasterHasNoRegions) {
  EXPECT_TRUE(decode_isim(IsimRaster(32, 32, 20), 20).empty());
}

TEST(DecodeIsim, UnknownGrayValueListed) {
  IsimRaster r(32, 32, 20);
  r.at(3, 4) = 7;
  r.at(5, 5) = 12;
  try {
    decode_isim(r, 20);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos) << e.what();
  }
}

TEST(DecodeIsim, TouchingSameClassBoxesMerge) {
  auto raster = render_isim(layout_with(2, 64, 64, {{1, {0, 0, 10, 10}}, {1, {10, 0, 20, 10}}}));
  auto regions = decode_isim(raster, 2);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].bbox, (BoxPx{0, 0, 20, 10}));
}

TEST(DecodeIsim, DiagonalNeighboursAreSeparateRegions) {
  IsimRaster r(8, 8, 1);
  r.at(1, 1) = 255;
  r.at(2, 2) = 255;
  EXPECT_EQ(decode_isim(r, 1).size(), 2u);
}

TEST(Png, EncodesEightBitGrayNonInterlaced) {
  auto raster = render_isim(layout_with(20, 120, 90, {{3, {10, 10, 50, 40}}}));
  const auto bytes = encode_png(raster);
  ASSERT_GT(bytes.size(), 33u);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  EXPECT_EQ(bytes.substr(12, 4), "IHDR");
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 8);  // bit depth
  EXPECT_EQ(static_cast<unsigned char>(bytes[25]), 0);  // grayscale
  EXPECT_EQ(static_cast<unsigned char>(bytes[28]), 0);  // no interlace
  EXPECT_EQ(bytes, encode_png(raster));
}

TEST(Png, FileRoundTrip) {
  TempDir dir;
  Rng rng(5);
  auto layout = random_separated_layout(rng, dior_table(), {800, 800}, 40);
  auto raster = render_isim(layout);
  write_png(dir.path() / "a.png", raster);
  auto back = read_png(dir.path() / "a.png", 20);
  EXPECT_EQ(back.width, raster.width);
  EXPECT_EQ(back.height, raster.height);
  EXPECT_EQ(back.pixels, raster.pixels);
}

TEST(Png, RejectsNonPngAndMissing) {
  TempDir dir;
  write_file(dir.path() / "x.png", "not a png at all");
  EXPECT_THROW(read_png(dir.path() / "x.png", 20), IoError);
  EXPECT_THROW(read_png(dir.path() / "missing.png", 20), IoError);
  EXPECT_THROW(write_png(dir.path() / "x.png" / "y.png", IsimRaster(4, 4, 1)), IoError);
}

}  // namespace
}  // namespace isimforge
