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
#include <map>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "isimforge/error.hpp"

namespace isimforge {
namespace {

double mass(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

TEST(Fit1D, HandCountedTwoBins) {
  // [1,3) holds 1 and 2, [3,5) holds 3 and 4.
  const std::vector<double> xs = {1, 2, 3, 4};
  auto d = fit_1d(xs, 2, Interval{1, 5});
  ASSERT_EQ(d.bins(), 2u);
  EXPECT_NEAR(d.probs()[0], 0.5, 1e-9);
  EXPECT_NEAR(d.probs()[1], 0.5, 1e-9);
  EXPECT_EQ(d.edges(), (std::vector<double>{1, 3, 5}));
}

TEST(Fit1D, PointMassKeepsSmoothingInEmptyBins) {
  const std::vector<double> xs(50, 3.7);
  auto d = fit_1d(xs, 4);
  EXPECT_EQ(d.support().lo, 3.7);
  EXPECT_NEAR(d.probs()[0], 1.0, 1e-5);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_GT(d.probs()[i], 0.0);
    EXPECT_NEAR(d.probs()[i], 1e-6, 1e-8);
  }
  EXPECT_NEAR(mass(d.probs()), 1.0, kMassTolerance);
}

TEST(Fit1D, MaximumLandsInLastBin) {
  const std::vector<double> xs = {0.0, 1.0};
  auto d = fit_1d(xs, 2);
  EXPECT_GT(d.support().hi, 1.0);
  EXPECT_NEAR(d.probs()[1], 0.5, 1e-9);
}

TEST(Fit1D, UniformDrawsFillBinsEvenly) {
  Rng rng(11);
  std::vector<double> xs(100000);
  for (double& x : xs) x = rng.uniform();
  auto d = fit_1d(xs, 10);
  for (double p : d.probs()) EXPECT_NEAR(p, 0.1, 0.01);
}

TEST(Fit1D, Errors) {
  EXPECT_THROW(
      {
        try {
          fit_1d(std::vector<double>{}, 4);
        } catch (const InvalidInput& e) {
          EXPECT_STREQ(e.what(), "cannot fit empty density");
          throw;
        }
      },
      InvalidInput);
  EXPECT_THROW(fit_1d(std::vector<double>{1.0}, 0), InvalidInput);
  EXPECT_THROW(fit_1d(std::vector<double>{7.0}, 2, Interval{0, 1}), InvalidInput);
}

TEST(Density1D, RejectsBrokenInvariants) {
  EXPECT_THROW(Density1D({0, 1}, {0.5}), InvalidInput);
  EXPECT_THROW(Density1D({0, 0, 1}, {0.5, 0.5}), InvalidInput);
  EXPECT_THROW(Density1D({0, 1, 2}, {1.5, -0.5}), InvalidInput);
  EXPECT_THROW(Density1D({0, 1, 2}, {1.0}), InvalidInput);
}

TEST(Sample1D, PointMassBinStaysInBin) {
  Density1D d({2, 3}, {1.0});
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = d.sample(rng);
    ASSERT_GE(x, 2.0);
    ASSERT_LT(x, 3.0);
  }
}

TEST(Sample1D, ZeroMassBinIsNeverDrawn) {
  Density1D d({0, 1, 2}, {1.0, 0.0});
  Rng rng(2);
  for (int i = 0; i < 100000; ++i) ASSERT_LT(d.sample(rng), 1.0);

  Density1D tail({0, 1, 2}, {0.0, 1.0});
  for (int i = 0; i < 100000; ++i) ASSERT_GE(tail.sample(rng), 1.0);
}

TEST(Sample1D, MonteCarloMeanMatchesDensityMean) {
  Rng fit_rng(3);
  std::vector<double> xs(20000);
  for (double& x : xs) x = fit_rng.uniform();
  auto d = fit_1d(xs, 16);

  Rng rng(4);
  double sum = 0.0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) sum += d.sample(rng);
  EXPECT_NEAR(sum / kDraws, d.mean(), 0.01);
}

TEST(Sample1D, DrawsNeverLeaveSupport) {
  Rng fit_rng(5);
  std::vector<double> xs(5000);
  for (double& x : xs) x = std::exp(3.0 * fit_rng.uniform());
  auto d = fit_1d(xs, 64);
  Rng rng(6);
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < 1000000; ++i) {
    const double x = d.sample(rng);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  EXPECT_GE(lo, d.support().lo);
  EXPECT_LT(hi, d.support().hi);
}

TEST(Sample1D, RefitReproducesBins) {
  Rng fit_rng(7);
  std::vector<double> xs(3000);
  for (double& x : xs) x = fit_rng.uniform() * fit_rng.uniform();
  auto d = fit_1d(xs, 64);

  Rng rng(8);
  std::vector<double> draws(1000000);
  for (double& x : draws) x = d.sample(rng);
  auto refit = fit_1d_on_edges(draws, d.edges());
  EXPECT_LE(total_variation(refit.probs(), d.probs()), 0.01);
}

TEST(Sample1D, SameSeedSameSequence) {
  auto d = fit_1d(std::vector<double>{0.1, 0.4, 0.4, 0.9, 2.5}, 8);
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(d.sample(a), d.sample(b));
}

TEST(Fit2D, SinglePointSamplesStayInItsCell) {
  const std::vector<Point2> pts(20, Point2{0.5, 0.5});
  auto d = fit_2d(pts, 4, 4, std::pair{Interval{0, 1}, Interval{0, 1}});
  const auto cell = d.cell_of({0.5, 0.5});
  ASSERT_TRUE(cell.has_value());
  Rng rng(9);
  int inside = 0;
  for (int i = 0; i < 1000; ++i) inside += d.cell_of(d.sample(rng)) == cell;
  // Smoothing leaves 15e-6 of mass elsewhere.
  EXPECT_GE(inside, 999);
}

TEST(Fit2D, UniformGridGivesEqualCells) {
  std::vector<Point2> pts;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) pts.push_back({(i + 0.5) / 100, (j + 0.5) / 100});
  auto d = fit_2d(pts, 4, 4, std::pair{Interval{0, 1}, Interval{0, 1}});
  for (double p : d.probs()) EXPECT_NEAR(p, 1.0 / 16, 0.02);
  EXPECT_NEAR(mass(d.probs()), 1.0, kMassTolerance);
}

TEST(Fit2D, MarginalMatchesOneDimensionalFit) {
  Rng rng(10);
  std::vector<Point2> pts(5000);
  std::vector<double> xs;
  for (auto& p : pts) {
    p = {rng.uniform() * rng.uniform(), rng.uniform()};
    xs.push_back(p.x);
  }
  auto d2 = fit_2d(pts, 16, 8);
  auto d1 = fit_1d_on_edges(xs, d2.x_edges());
  const auto mx = d2.marginal_x();
  ASSERT_EQ(mx.edges(), d1.edges());
  for (std::size_t i = 0; i < d1.bins(); ++i) {
    EXPECT_NEAR(mx.probs()[i], d1.probs()[i], 1e-4);
  }
}

TEST(Sample2D, RefitReproducesCells) {
  Rng fit_rng(12);
  std::vector<Point2> pts(4000);
  for (auto& p : pts) p = {fit_rng.uniform(), fit_rng.uniform() * fit_rng.uniform()};
  auto d = fit_2d(pts, 8, 8, std::pair{Interval{0, 1}, Interval{0, 1}});
  Rng rng(13);
  std::vector<double> counts(64, 0.0);
  constexpr int kDraws = 1000000;
  for (int i = 0; i < kDraws; ++i) counts[*d.cell_of(d.sample(rng))] += 1.0;
  for (double& c : counts) c /= kDraws;
  EXPECT_LE(total_variation(counts, d.probs()), 0.01);
}

TEST(Categorical, SingleLabelAlwaysDrawn) {
  Categorical c({7}, {1.0});
  Rng rng(14);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(c.sample(rng), 7u);
}

TEST(Categorical, FrequencyMatchesProbability) {
  Categorical c({1, 2}, {0.9, 0.1});
  Rng rng(15);
  int first = 0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) first += c.sample(rng) == 1;
  EXPECT_NEAR(static_cast<double>(first) / kDraws, 0.9, 0.01);
}

TEST(Categorical, InsertionOrderDoesNotChangeFrequencies) {
  Categorical a({1, 2, 3}, {0.2, 0.5, 0.3});
  Categorical b({3, 1, 2}, {0.3, 0.2, 0.5});
  Rng ra(16), rb(16);
  std::map<std::uint32_t, double> fa, fb;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    fa[a.sample(ra)] += 1.0 / kDraws;
    fb[b.sample(rb)] += 1.0 / kDraws;
  }
  for (std::uint32_t l : {1u, 2u, 3u}) EXPECT_NEAR(fa[l], fb[l], 0.01);
}

TEST(Categorical, RejectsDuplicatesAndBadMass) {
  EXPECT_THROW(Categorical({1, 1}, {0.5, 0.5}), InvalidInput);
  EXPECT_THROW(Categorical({1, 2}, {0.5, 0.6}), InvalidInput);
  EXPECT_THROW(Categorical({1}, {0.5, 0.5}), InvalidInput);
}

TEST(TotalVariation, HalfL1) {
  EXPECT_DOUBLE_EQ(total_variation(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(
      total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}), 0.25);
}

}  // namespace
}  // namespace isimforge
