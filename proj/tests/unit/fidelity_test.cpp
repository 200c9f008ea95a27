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

#include "isimforge/fidelity.hpp"

#include <set>

#include "gtest/gtest.h"
#include "isimforge/error.hpp"
#include "synthetic.hpp"

namespace isimforge {
namespace {

using testing::make_point_mass_graph;

class StructuredGraph : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    graph_ = new Scdkg(fit_scdkg(testing::make_structured_dataset(2000, 5)));
  }
  static void TearDownTestSuite() { delete graph_; }
  static std::vector<Layout> sample(const Scdkg& g, std::size_t n, std::uint64_t seed) {
    return sample_batch(g, {800, 800}, seed, n, {.max_iou = 0.0});
  }
  static Scdkg* graph_;
};
Scdkg* StructuredGraph::graph_ = nullptr;

TEST_F(StructuredGraph, SelfConsistency) {
  const auto r = evaluate_fidelity(*graph_, sample(*graph_, 10000, 1));
  EXPECT_EQ(r.n_layouts, 10000u);
  EXPECT_LE(r.tv_class, 0.02);
  EXPECT_LE(r.tv_count, 0.05);
  ASSERT_EQ(r.per_class_geom.size(), 4u);
  for (const auto& [id, g] : r.per_class_geom) {
    EXPECT_LE(g.aspect, 0.05) << id;
    EXPECT_LE(g.scale, 0.05) << id;
    EXPECT_LE(g.location, 0.05) << id;
  }
}

TEST_F(StructuredGraph, DeterministicGivenLayouts) {
  const auto layouts = sample(*graph_, 300, 2);
  const auto a = evaluate_fidelity(*graph_, layouts);
  const auto b = evaluate_fidelity(*graph_, layouts);
  EXPECT_EQ(fidelity_json(a, graph_->class_table), fidelity_json(b, graph_->class_table));
}

TEST_F(StructuredGraph, AblateNoneIsIdentity) {
  EXPECT_EQ(ablate(*graph_, Factors::none()), *graph_);
}

TEST_F(StructuredGraph, AblateAllUsesPooledGeometryAndPrior) {
  const auto a = ablate(*graph_, Factors::all());
  for (const auto& geo : a.geometry) EXPECT_EQ(geo, graph_->geometry_all);
  for (std::size_t r = 0; r < a.class_count(); ++r) {
    const auto row = a.p_id.row(r);
    EXPECT_EQ(std::vector<double>(row.begin(), row.end()), graph_->p_ic.probs());
  }
  EXPECT_EQ(a.p_ic, graph_->p_ic);
  EXPECT_EQ(a.p_in, graph_->p_in);
  EXPECT_NO_THROW(a.validate());
}

TEST_F(StructuredGraph, FullGraphBeatsFullyAblated) {
  const auto full = evaluate_fidelity(*graph_, sample(*graph_, 2000, 3));
  const auto none = evaluate_fidelity(*graph_, sample(ablate(*graph_, Factors::all()), 2000, 3));
  EXPECT_LT(full.summed_tv() + 0.5, none.summed_tv());
}

TEST_F(StructuredGraph, EnablingAFactorLowersItsAxis) {
  const auto full = evaluate_fidelity(*graph_, sample(*graph_, 2000, 4));
  const auto eval_without = [&](Factors off) {
    return evaluate_fidelity(*graph_, sample(ablate(*graph_, off), 2000, 4));
  };
  EXPECT_GT(eval_without({.aspect = true}).mean_aspect_tv(), full.mean_aspect_tv() + 0.05);
  EXPECT_GT(eval_without({.scale = true}).mean_scale_tv(), full.mean_scale_tv() + 0.05);
  EXPECT_GT(eval_without({.location = true}).mean_location_tv(),
            full.mean_location_tv() + 0.05);
  EXPECT_GT(eval_without({.p_id = true}).cooccurrence_tv, full.cooccurrence_tv + 0.05);
}

TEST_F(StructuredGraph, ReportsRender) {
  const auto r = evaluate_fidelity(*graph_, sample(*graph_, 200, 6));
  const auto doc = fidelity_json(r, graph_->class_table);
  for (const char* key : {"n_layouts", "tv_class", "tv_count", "cooccurrence_tv",
                          "summed_tv", "per_class_geom"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_TRUE(doc["per_class_geom"].contains("ship"));
  EXPECT_NE(fidelity_table(r, graph_->class_table).find("ship"), std::string::npos);
  const auto table = ablation_table({{ablation_grid().back(), r}});
  EXPECT_NE(table.find("9"), std::string::npos);
}

TEST(Fidelity, UniformPriorAgainstPointMassPrior) {
  const std::size_t m = 5;
  std::vector<std::string> names = {"a", "b", "c", "d", "e"};
  auto point = make_point_mass_graph(names, 1, 1, {1, 1, 1, 1, 1},
                                     std::vector<testing::PointGeometry>(m));
  auto uniform = point;
  uniform.p_ic = Categorical({1, 2, 3, 4, 5}, std::vector<double>(m, 0.2));
  const auto layouts = sample_batch(uniform, {800, 800}, 10, 20000, {.max_iou = 0.0});
  const auto r = evaluate_fidelity(point, layouts);
  EXPECT_NEAR(r.tv_class, 1.0 - 1.0 / m, 0.02);
}

TEST(Fidelity, RepeatedPointMassLayoutHasZeroDistance) {
  auto g = make_point_mass_graph({"tank"}, 3, 1, {1}, {{2.0, 0.03, 0.4, 0.6}});
  const auto layout = sample_layout(g, {800, 800}, 1);
  const auto r = evaluate_fidelity(g, std::vector<Layout>(100, layout));
  EXPECT_NEAR(r.tv_class, 0.0, 1e-9);
  EXPECT_NEAR(r.tv_count, 0.0, 1e-9);
  EXPECT_NEAR(r.cooccurrence_tv, 0.0, 1e-9);
  ASSERT_EQ(r.per_class_geom.size(), 1u);
  EXPECT_NEAR(r.per_class_geom.at(1).aspect, 0.0, 1e-9);
  EXPECT_NEAR(r.per_class_geom.at(1).scale, 0.0, 1e-9);
  EXPECT_NEAR(r.per_class_geom.at(1).location, 0.0, 1e-9);
  EXPECT_NEAR(r.summed_tv(), 0.0, 1e-9);
}

TEST(Fidelity, TooFewLayouts) {
  auto g = make_point_mass_graph({"tank"}, 3, 1, {1}, {{}});
  const std::vector<Layout> layouts(99, sample_layout(g, {800, 800}, 1));
  try {
    evaluate_fidelity(g, layouts);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos) << e.what();
  }
}

TEST(AblationGrid, MirrorsTableRows) {
  const auto grid = ablation_grid();
  ASSERT_EQ(grid.size(), 9u);
  EXPECT_EQ(grid.front().enabled, Factors::none());
  EXPECT_EQ(grid.back().enabled, Factors::all());
  std::set<std::string> labels;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(grid[i].index, static_cast<int>(i + 1));
    labels.insert(grid[i].enabled.label());
    if (i > 0) EXPECT_TRUE(grid[i].enabled.p_id);
  }
  EXPECT_EQ(labels.size(), 9u);
}

}  // namespace
}  // namespace isimforge
