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
#include <string>
#include <vector>

#include "isimforge/dataset.hpp"
#include "isimforge/density.hpp"
#include "isimforge/scdkg.hpp"

namespace isimforge {

// Smallest box side, in pixels, a sampled object may have.
inline constexpr int kMinBoxSidePx = 2;

struct SamplerConfig {
  std::size_t max_objects = 100;
  // Same-class IoU above which a candidate's geometry is redrawn; 0 turns
  // overlap control off.
  double max_iou = 0.3;
  std::size_t max_retries = 10;

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

struct LayoutObject {
  ClassId class_id = 0;
  std::string class_name;
  double aspect_ratio = 1.0;
  double scale = 0.0;
  Point2 center;
  BoxPx bbox;  // integer pixel coordinates, half-open

  friend bool operator==(const LayoutObject&, const LayoutObject&) = default;
};

struct Layout {
  ImageSize image_size;
  std::size_t class_count = 0;
  std::vector<std::string> class_names;  // index m - 1
  std::vector<LayoutObject> objects;
  std::uint64_t seed = 0;
  std::string scdkg_digest;

  friend bool operator==(const Layout&, const Layout&) = default;
};

// Pixel box for a sampled geometry: w = scale * W * sqrt(aspect),
// h = scale * W / sqrt(aspect), centred on center * (W, H), rounded to whole
// pixels, clamped to the frame and widened to kMinBoxSidePx if needed.
BoxPx geometry_to_box(double aspect_ratio, double scale, Point2 center,
                      ImageSize size);

double iou(const BoxPx& a, const BoxPx& b) noexcept;

// One pass of the object-list construction: draw the count, draw the first
// class from p_ic, then per object draw aspect, scale and location from the
// class geometry and the following class from that class's p_id row.
// Each call hashes `g` to stamp the layout's graph digest; prefer
// sample_batch when drawing many layouts from one graph.
Layout sample_layout(const Scdkg& g, ImageSize size, std::uint64_t seed,
                     const SamplerConfig& cfg = {});

// Element i is sample_layout(g, size, split_seed(base_seed, first_index + i),
// cfg), so a long batch can be drawn in chunks. The result does not depend
// on `jobs`.
std::vector<Layout> sample_batch(const Scdkg& g, ImageSize size,
                                 std::uint64_t base_seed, std::size_t count,
                                 const SamplerConfig& cfg = {},
                                 std::size_t jobs = 1, std::size_t first_index = 0);

}  // namespace isimforge
