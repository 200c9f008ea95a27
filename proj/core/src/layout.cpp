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

#include "isimforge/layout.hpp"

#include <algorithm>
#include <cmath>

#include "isimforge/error.hpp"
#include "isimforge/parallel.hpp"
#include "isimforge/random.hpp"

namespace isimforge {
namespace {

// Rounds [center - extent / 2, center + extent / 2] to whole pixels inside
// [0, limit] and enforces the minimum side.
std::pair<double, double> pixel_span(double center, double extent, int limit) {
  auto lo = static_cast<double>(std::lround(center - 0.5 * extent));
  auto hi = static_cast<double>(std::lround(center + 0.5 * extent));
  lo = std::clamp(lo, 0.0, static_cast<double>(limit));
  hi = std::clamp(hi, 0.0, static_cast<double>(limit));
  if (hi - lo < kMinBoxSidePx) {
    lo = std::clamp(static_cast<double>(std::lround(center)) - 1.0, 0.0,
                    static_cast<double>(limit - kMinBoxSidePx));
    hi = lo + kMinBoxSidePx;
  }
  return {lo, hi};
}

void check_config(const Scdkg& g, ImageSize size, const SamplerConfig& cfg) {
  if (size.width < 32 || size.height < 32) {
    throw InvalidInput("image size must be at least 32 x 32");
  }
  if (cfg.max_objects == 0) throw InvalidInput("max_objects must be >= 1");
  if (!(cfg.max_iou >= 0.0 && cfg.max_iou <= 1.0)) {
    throw InvalidInput("max_iou must lie in [0, 1]");
  }
  g.validate();
}

struct Draw {
  double aspect;
  double scale;
  Point2 center;
};

Draw draw_geometry(const ClassGeometry& geo, Rng& rng) {
  Draw d;
  d.aspect = geo.aspect_ratio.sample(rng);
  d.scale = geo.scale.sample(rng);
  d.center = geo.location.sample(rng);
  return d;
}

Layout sample_checked(const Scdkg& g, const std::vector<Categorical>& rows,
                      const std::string& digest, ImageSize size,
                      std::uint64_t seed, const SamplerConfig& cfg) {
  Rng rng(seed);
  Layout layout;
  layout.image_size = size;
  layout.class_count = g.class_count();
  layout.class_names = g.class_table.names();
  layout.seed = seed;
  layout.scdkg_digest = digest;

  const double raw_n = std::round(g.p_in.sample(rng));
  const auto n = static_cast<std::size_t>(
      std::clamp(raw_n, 1.0, static_cast<double>(cfg.max_objects)));
  layout.objects.reserve(n);

  ClassId cls = g.p_ic.sample(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& geo = g.geometry_of(cls);
    Draw d = draw_geometry(geo, rng);
    BoxPx box = geometry_to_box(d.aspect, d.scale, d.center, size);
    if (cfg.max_iou > 0.0) {
      auto collides = [&](const BoxPx& b) {
        return std::any_of(layout.objects.begin(), layout.objects.end(),
                           [&](const LayoutObject& o) {
                             return o.class_id == cls && iou(o.bbox, b) > cfg.max_iou;
                           });
      };
      for (std::size_t r = 0; r < cfg.max_retries && collides(box); ++r) {
        d = draw_geometry(geo, rng);
        box = geometry_to_box(d.aspect, d.scale, d.center, size);
      }
    }
    layout.objects.push_back(
        {cls, g.class_table.name_of(cls), d.aspect, d.scale, d.center, box});
    cls = rows[cls - 1].sample(rng);
  }
  return layout;
}

std::vector<Categorical> transition_rows(const Scdkg& g) {
  std::vector<Categorical> rows;
  rows.reserve(g.class_count());
  for (ClassId m = 1; m <= g.class_count(); ++m) rows.push_back(g.transition_from(m));
  return rows;
}

}  // namespace

BoxPx geometry_to_box(double aspect_ratio, double scale, Point2 center,
                      ImageSize size) {
  const double root = std::sqrt(aspect_ratio);
  const double w = scale * size.width * root;
  const double h = scale * size.width / root;
  auto [x0, x1] = pixel_span(center.x * size.width, w, size.width);
  auto [y0, y1] = pixel_span(center.y * size.height, h, size.height);
  return {x0, y0, x1, y1};
}

double iou(const BoxPx& a, const BoxPx& b) noexcept {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

Layout sample_layout(const Scdkg& g, ImageSize size, std::uint64_t seed,
                     const SamplerConfig& cfg) {
  check_config(g, size, cfg);
  return sample_checked(g, transition_rows(g), scdkg_digest(g), size, seed, cfg);
}

std::vector<Layout> sample_batch(const Scdkg& g, ImageSize size,
                                 std::uint64_t base_seed, std::size_t count,
                                 const SamplerConfig& cfg, std::size_t jobs,
                                 std::size_t first_index) {
  if (count == 0) throw InvalidInput("batch count must be >= 1");
  check_config(g, size, cfg);
  const auto rows = transition_rows(g);
  const auto digest = scdkg_digest(g);
  std::vector<Layout> out(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    out[i] = sample_checked(g, rows, digest, size,
                            split_seed(base_seed, first_index + i), cfg);
  });
  return out;
}

}  // namespace isimforge
