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
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "isimforge/random.hpp"

namespace isimforge {

// Mass given to each empty histogram bin (relative to a total of 1) before
// renormalization.
inline constexpr double kDefaultSmoothing = 1e-6;

// Tolerance for "sums to one" checks on every distribution in the library.
inline constexpr double kMassTolerance = 1e-9;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Piecewise-constant density over ascending bin edges. Bin i covers
// [edges[i], edges[i+1]).
class Density1D {
 public:
  // Throws InvalidInput unless edges are strictly ascending, probs are
  // nonnegative, |edges| = |probs| + 1 and the mass sums to 1.
  Density1D(std::vector<double> edges, std::vector<double> probs);

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t bins() const noexcept { return probs_.size(); }
  Interval support() const noexcept { return {edges_.front(), edges_.back()}; }

  // Index of the bin holding x, or nullopt outside [lo, hi]. x == hi maps
  // to the last bin.
  std::optional<std::size_t> bin_of(double x) const noexcept;

  double mean() const noexcept;

  // Inverse-CDF bin choice followed by a uniform point inside the bin.
  // Result lies in [lo, hi). Consumes exactly two uniforms.
  double sample(Rng& rng) const;

  friend bool operator==(const Density1D& a, const Density1D& b) {
    return a.edges_ == b.edges_ && a.probs_ == b.probs_;
  }

 private:
  std::vector<double> edges_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

// Histogram over a Bx x By grid. probs is row-major in x: cell (ix, iy)
// lives at ix * By + iy.
class Density2D {
 public:
  Density2D(std::vector<double> x_edges, std::vector<double> y_edges,
            std::vector<double> probs);

  const std::vector<double>& x_edges() const noexcept { return x_edges_; }
  const std::vector<double>& y_edges() const noexcept { return y_edges_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t bins_x() const noexcept { return x_edges_.size() - 1; }
  std::size_t bins_y() const noexcept { return y_edges_.size() - 1; }
  double prob(std::size_t ix, std::size_t iy) const {
    return probs_[ix * bins_y() + iy];
  }

  std::optional<std::size_t> cell_of(Point2 p) const noexcept;

  Density1D marginal_x() const;
  Density1D marginal_y() const;

  // Consumes exactly three uniforms.
  Point2 sample(Rng& rng) const;

  friend bool operator==(const Density2D& a, const Density2D& b) {
    return a.x_edges_ == b.x_edges_ && a.y_edges_ == b.y_edges_ &&
           a.probs_ == b.probs_;
  }

 private:
  std::vector<double> x_edges_;
  std::vector<double> y_edges_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

// Discrete distribution over integer labels.
class Categorical {
 public:
  Categorical(std::vector<std::uint32_t> labels, std::vector<double> probs);

  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return labels_.size(); }
  double prob_of(std::uint32_t label) const noexcept;

  // Consumes exactly one uniform.
  std::uint32_t sample(Rng& rng) const;

  friend bool operator==(const Categorical& a, const Categorical& b) {
    return a.labels_ == b.labels_ && a.probs_ == b.probs_;
  }

 private:
  std::vector<std::uint32_t> labels_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

// Equal-width edges over `support`; the last edge is exactly support.hi.
std::vector<double> uniform_edges(Interval support, std::size_t bins);

// Histogram fit. Without an explicit support the range is [min, max] of the
// samples with hi widened by 1e-9 so the maximum falls inside the last bin.
// With an explicit support, samples outside [lo, hi] are rejected.
Density1D fit_1d(std::span<const double> samples, std::size_t bins,
                 std::optional<Interval> support = std::nullopt,
                 double smoothing = kDefaultSmoothing);

// Fit on caller-provided edges (used for unit-width count bins).
Density1D fit_1d_on_edges(std::span<const double> samples,
                          std::vector<double> edges,
                          double smoothing = kDefaultSmoothing);

Density2D fit_2d(std::span<const Point2> points, std::size_t bins_x,
                 std::size_t bins_y,
                 std::optional<std::pair<Interval, Interval>> support =
                     std::nullopt,
                 double smoothing = kDefaultSmoothing);

// Free-function spellings of the member samplers.
inline double sample_1d(const Density1D& d, Rng& rng) { return d.sample(rng); }
inline Point2 sample_2d(const Density2D& d, Rng& rng) { return d.sample(rng); }
inline std::uint32_t sample_categorical(const Categorical& c, Rng& rng) {
  return c.sample(rng);
}

// Half the L1 distance between two probability vectors of equal length.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace isimforge
