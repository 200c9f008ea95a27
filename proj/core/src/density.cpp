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

#include "isimforge/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "isimforge/error.hpp"

namespace isimforge {
namespace {

void check_edges(const std::vector<double>& edges, const char* what) {
  if (edges.size() < 2) {
    throw InvalidInput(std::string(what) + ": need at least two bin edges");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) {
      throw InvalidInput(std::string(what) + ": non-finite bin edge");
    }
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw InvalidInput(std::string(what) + ": bin edges not strictly ascending");
    }
  }
}

// Validates a mass vector and returns its running sum.
std::vector<double> cumulative(const std::vector<double>& probs,
                               const char* what) {
  if (probs.empty()) {
    throw InvalidInput(std::string(what) + ": empty probability vector");
  }
  std::vector<double> cdf(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      throw InvalidInput(std::string(what) + ": negative or non-finite probability");
    }
    total += probs[i];
    cdf[i] = total;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw InvalidInput(std::string(what) + ": probabilities sum to " +
                       std::to_string(total) + ", expected 1");
  }
  return cdf;
}

// First index whose cumulative mass exceeds u * total. Zero-mass entries are
// never returned.
std::size_t pick(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) {
    // u * total rounded up to total; fall back to the last entry with mass.
    std::size_t i = cdf.size() - 1;
    while (i > 0 && cdf[i] == cdf[i - 1]) --i;
    return i;
  }
  return static_cast<std::size_t>(it - cdf.begin());
}

double jitter(double lo, double hi, double u) {
  const double x = lo + u * (hi - lo);
  return x < hi ? x : std::nextafter(hi, lo);
}

std::optional<std::size_t> locate(const std::vector<double>& edges,
                                  double x) noexcept {
  if (!(x >= edges.front()) || !(x <= edges.back())) return std::nullopt;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - edges.begin());
  idx = idx == 0 ? 0 : idx - 1;
  return std::min(idx, edges.size() - 2);
}

std::vector<double> normalize_counts(const std::vector<double>& counts,
                                     double smoothing) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> probs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    probs[i] = counts[i] > 0.0 ? counts[i] / n : smoothing;
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return probs;
}

Interval data_range(std::span<const double> samples) {
  auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  return {*mn, *mx + 1e-9};
}

}  // namespace

Density1D::Density1D(std::vector<double> edges, std::vector<double> probs)
    : edges_(std::move(edges)), probs_(std::move(probs)) {
  check_edges(edges_, "density");
  if (edges_.size() != probs_.size() + 1) {
    throw InvalidInput("density: edge count must be bin count + 1");
  }
  cdf_ = cumulative(probs_, "density");
}

std::optional<std::size_t> Density1D::bin_of(double x) const noexcept {
  return locate(edges_, x);
}

double Density1D::mean() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    m += probs_[i] * 0.5 * (edges_[i] + edges_[i + 1]);
  }
  return m;
}

double Density1D::sample(Rng& rng) const {
  const std::size_t b = pick(cdf_, rng.uniform());
  return jitter(edges_[b], edges_[b + 1], rng.uniform());
}

Density2D::Density2D(std::vector<double> x_edges, std::vector<double> y_edges,
                     std::vector<double> probs)
    : x_edges_(std::move(x_edges)),
      y_edges_(std::move(y_edges)),
      probs_(std::move(probs)) {
  check_edges(x_edges_, "density2d x");
  check_edges(y_edges_, "density2d y");
  if (probs_.size() != bins_x() * bins_y()) {
    throw InvalidInput("density2d: grid size does not match edges");
  }
  cdf_ = cumulative(probs_, "density2d");
}

std::optional<std::size_t> Density2D::cell_of(Point2 p) const noexcept {
  auto ix = locate(x_edges_, p.x);
  auto iy = locate(y_edges_, p.y);
  if (!ix || !iy) return std::nullopt;
  return *ix * bins_y() + *iy;
}

Density1D Density2D::marginal_x() const {
  std::vector<double> m(bins_x(), 0.0);
  for (std::size_t ix = 0; ix < bins_x(); ++ix)
    for (std::size_t iy = 0; iy < bins_y(); ++iy) m[ix] += prob(ix, iy);
  return Density1D(x_edges_, std::move(m));
}

Density1D Density2D::marginal_y() const {
  std::vector<double> m(bins_y(), 0.0);
  for (std::size_t ix = 0; ix < bins_x(); ++ix)
    for (std::size_t iy = 0; iy < bins_y(); ++iy) m[iy] += prob(ix, iy);
  return Density1D(y_edges_, std::move(m));
}

Point2 Density2D::sample(Rng& rng) const {
  const std::size_t cell = pick(cdf_, rng.uniform());
  const std::size_t ix = cell / bins_y();
  const std::size_t iy = cell % bins_y();
  const double x = jitter(x_edges_[ix], x_edges_[ix + 1], rng.uniform());
  const double y = jitter(y_edges_[iy], y_edges_[iy + 1], rng.uniform());
  return {x, y};
}

Categorical::Categorical(std::vector<std::uint32_t> labels,
                         std::vector<double> probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
  if (labels_.size() != probs_.size()) {
    throw InvalidInput("categorical: label and probability counts differ");
  }
  std::set<std::uint32_t> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) {
    throw InvalidInput("categorical: duplicate label");
  }
  cdf_ = cumulative(probs_, "categorical");
}

double Categorical::prob_of(std::uint32_t label) const noexcept {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? 0.0 : probs_[it - labels_.begin()];
}

std::uint32_t Categorical::sample(Rng& rng) const {
  return labels_[pick(cdf_, rng.uniform())];
}

std::vector<double> uniform_edges(Interval support, std::size_t bins) {
  if (bins == 0) throw InvalidInput("density: bins must be >= 1");
  if (!(support.hi > support.lo)) {
    throw InvalidInput("density: empty support interval");
  }
  std::vector<double> edges(bins + 1);
  const double width = support.hi - support.lo;
  for (std::size_t i = 0; i < bins; ++i) {
    edges[i] = support.lo + width * static_cast<double>(i) /
                                static_cast<double>(bins);
  }
  edges[bins] = support.hi;
  // Tiny supports can collapse neighbouring edges in floating point.
  for (std::size_t i = 1; i <= bins; ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw InvalidInput("density: support too narrow for requested bins");
    }
  }
  return edges;
}

Density1D fit_1d_on_edges(std::span<const double> samples,
                          std::vector<double> edges, double smoothing) {
  if (samples.empty()) throw InvalidInput("cannot fit empty density");
  check_edges(edges, "density");
  std::vector<double> counts(edges.size() - 1, 0.0);
  for (double x : samples) {
    auto b = locate(edges, x);
    if (!b) {
      throw InvalidInput("density: sample " + std::to_string(x) +
                         " outside support");
    }
    counts[*b] += 1.0;
  }
  auto probs = normalize_counts(counts, smoothing);
  return Density1D(std::move(edges), std::move(probs));
}

Density1D fit_1d(std::span<const double> samples, std::size_t bins,
                 std::optional<Interval> support, double smoothing) {
  if (samples.empty()) throw InvalidInput("cannot fit empty density");
  if (bins == 0) throw InvalidInput("density: bins must be >= 1");
  const Interval range = support ? *support : data_range(samples);
  return fit_1d_on_edges(samples, uniform_edges(range, bins), smoothing);
}

Density2D fit_2d(std::span<const Point2> points, std::size_t bins_x,
                 std::size_t bins_y,
                 std::optional<std::pair<Interval, Interval>> support,
                 double smoothing) {
  if (points.empty()) throw InvalidInput("cannot fit empty density");
  std::pair<Interval, Interval> range;
  if (support) {
    range = *support;
  } else {
    std::vector<double> xs, ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& p : points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    range = {data_range(xs), data_range(ys)};
  }
  auto x_edges = uniform_edges(range.first, bins_x);
  auto y_edges = uniform_edges(range.second, bins_y);
  std::vector<double> counts(bins_x * bins_y, 0.0);
  for (const auto& p : points) {
    auto ix = locate(x_edges, p.x);
    auto iy = locate(y_edges, p.y);
    if (!ix || !iy) throw InvalidInput("density2d: point outside support");
    counts[*ix * bins_y + *iy] += 1.0;
  }
  auto probs = normalize_counts(counts, smoothing);
  return Density2D(std::move(x_edges), std::move(y_edges), std::move(probs));
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw InvalidInput("total_variation: vectors differ in length");
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - q[i]);
  return 0.5 * l1;
}

}  // namespace isimforge
