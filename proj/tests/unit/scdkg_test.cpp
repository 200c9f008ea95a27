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

#include "isimforge/scdkg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gtest/gtest.h"
#include "isimforge/canonical_json.hpp"
#include "isimforge/error.hpp"
#include "isimforge/layout.hpp"
#include "synthetic.hpp"

namespace isimforge {
namespace {

using testing::TempDir;

ImageRecord image(std::string id, std::vector<std::pair<std::string, BoxPx>> objs) {
  ImageRecord img;
  img.image_id = std::move(id);
  img.size = {800, 800};
  for (auto& [name, box] : objs) img.objects.push_back({img.image_id, name, box});
  return img;
}

DatasetSummary port_and_airfield(std::size_t n) {
  std::vector<ImageRecord> images;
  for (std::size_t i = 0; i < n; ++i) {
    const double o = static_cast<double>(i % 50);
    images.push_back(image("port" + std::to_string(i), {{"ship", {o, o, o + 30, o + 10}},
                                                        {"ship", {o + 40, o, o + 70, o + 12}},
                                                        {"harbor", {300, 300, 400, 380}}}));
    images.push_back(image("air" + std::to_string(i), {{"airplane", {500, 500, 540, 540}}}));
  }
  return finalize_dataset(std::move(images));
}

void expect_stochastic(const Scdkg& g) {
  for (std::size_t r = 0; r < g.class_count(); ++r) {
    double s = 0.0;
    for (double v : g.p_id.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_NEAR(std::accumulate(g.p_ic.probs().begin(), g.p_ic.probs().end(), 0.0), 1.0, 1e-9);
}

TEST(Cooccurrence, HandCountedMatrix) {
  // image 1: a, a, b   image 2: b, c   image 3: a
  auto c = cooccurrence_counts(3, {{1, 1, 2}, {2, 3}, {1}});
  EXPECT_EQ(c(0, 0), 1.0);  // only image 1 has two a's
  EXPECT_EQ(c(0, 1), 1.0);
  EXPECT_EQ(c(0, 2), 0.0);
  EXPECT_EQ(c(1, 0), 1.0);
  EXPECT_EQ(c(1, 1), 0.0);
  EXPECT_EQ(c(1, 2), 1.0);
  EXPECT_EQ(c(2, 1), 1.0);
  auto p = row_normalize(c, 1.0);
  EXPECT_DOUBLE_EQ(p(0, 0), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(p(0, 2), 1.0 / 5.0);
}

TEST(FitScdkg, CoOccurringClassesKeepTheirMass) {
  auto g = fit_scdkg(port_and_airfield(100));
  const auto ship = *g.class_table.id_of("ship");
  const auto harbor = *g.class_table.id_of("harbor");
  for (ClassId row : {ship, harbor}) {
    const double kept = g.p_id(row - 1, ship - 1) + g.p_id(row - 1, harbor - 1);
    EXPECT_GT(kept, 0.98) << "row " << row;
  }
  expect_stochastic(g);
  EXPECT_NEAR(g.p_ic.prob_of(ship), 200.0 / 400.0, 1e-12);
}

TEST(FitScdkg, FixedBoxGivesPointMassGeometry) {
  std::vector<ImageRecord> images;
  for (int i = 0; i < 30; ++i) {
    images.push_back(image("i" + std::to_string(i), {{"car", {100, 100, 120, 110}}}));
  }
  auto g = fit_scdkg(finalize_dataset(std::move(images)));
  const auto& geo = g.geometry_of(1);
  EXPECT_DOUBLE_EQ(geo.aspect_ratio.support().lo, 2.0);
  EXPECT_NEAR(geo.aspect_ratio.probs()[0], 1.0, 1e-4);
  EXPECT_DOUBLE_EQ(geo.scale.support().lo, std::sqrt(200.0) / 800.0);
  EXPECT_NEAR(geo.scale.support().lo, 0.0177, 1e-4);
  EXPECT_NEAR(geo.scale.probs()[0], 1.0, 1e-4);
  // Center (110, 105) / 800 falls in one location cell.
  const auto cell = geo.location.cell_of({110.0 / 800, 105.0 / 800});
  ASSERT_TRUE(cell);
  // 1023 empty cells carry 1e-6 each.
  EXPECT_NEAR(geo.location.probs()[*cell], 1.0 / (1.0 + 1023e-6), 1e-12);
  // Single image size 1 -> p_in is one unit bin centred on 1.
  EXPECT_EQ(g.p_in.edges(), (std::vector<double>{0.5, 1.5}));
}

TEST(FitScdkg, RareClassesFallBackToPooledGeometry) {
  auto ds = port_and_airfield(15);  // 15 harbors, 15 airplanes, 30 ships
  auto g = fit_scdkg(ds, FitConfig{.min_samples = 20});
  EXPECT_EQ(g.geometry_of(*g.class_table.id_of("harbor")), g.geometry_all);
  EXPECT_EQ(g.geometry_of(*g.class_table.id_of("airplane")), g.geometry_all);
  EXPECT_NE(g.geometry_of(*g.class_table.id_of("ship")), g.geometry_all);
}

TEST(FitScdkg, ImageOrderDoesNotMatter) {
  auto ds = testing::make_structured_dataset(300, 5);
  auto shuffled = ds;
  std::mt19937 gen(1);
  std::shuffle(shuffled.images.begin(), shuffled.images.end(), gen);
  EXPECT_EQ(fit_scdkg(ds), fit_scdkg(shuffled));
}

TEST(FitScdkg, InvariantsHoldOnStructuredData) {
  auto g = fit_scdkg(testing::make_structured_dataset(500, 8));
  EXPECT_EQ(g.class_count(), 4u);
  expect_stochastic(g);
  EXPECT_NO_THROW(g.validate());
  for (const auto& geo : g.geometry) {
    EXPECT_GT(geo.aspect_ratio.support().lo, 0.0);
    EXPECT_LE(geo.scale.support().hi, 1.0);
  }
}

TEST(FitScdkg, EmptyDatasetIsFatal) {
  EXPECT_THROW(fit_scdkg(DatasetSummary{}), InvalidInput);
}

TEST(SaveLoad, RoundTripIsExactAndByteStable) {
  TempDir dir;
  auto g = fit_scdkg(testing::make_structured_dataset(200, 9));
  const auto path = dir.path() / "g.json";
  save_scdkg(g, path);
  auto back = load_scdkg(path);
  EXPECT_EQ(back, g);
  EXPECT_EQ(scdkg_digest(back), scdkg_digest(g));
  const auto second = dir.path() / "g2.json";
  save_scdkg(back, second);
  EXPECT_EQ(read_file(path), read_file(second));
}

TEST(SaveLoad, RejectsNonStochasticRow) {
  auto g = fit_scdkg(port_and_airfield(30));
  auto doc = scdkg_to_json(g);
  doc.erase("checksum");
  auto& row = doc["p_id"][0];
  for (auto& v : row) v = v.get<double>() * 0.5;
  try {
    scdkg_from_json(doc);
    FAIL() << "expected rejection";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("row not stochastic"), std::string::npos) << e.what();
  }
}

TEST(SaveLoad, RejectsChecksumAndVersionMismatch) {
  auto g = fit_scdkg(port_and_airfield(30));
  auto doc = scdkg_to_json(g);
  doc["source_digest"] = "tampered";
  try {
    scdkg_from_json(doc);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos);
  }
  doc = scdkg_to_json(g);
  doc["format_version"] = 2;
  try {
    scdkg_from_json(doc);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos);
  }
}

TEST(SaveLoad, HandWrittenMinimalGraphLoadsAndSamples) {
  TempDir dir;
  const auto path = dir.path() / "tiny.json";
  write_file(path, R"({
    "format_version": 1,
    "class_table": ["dam"],
    "p_ic": {"labels": [1], "probs": [1]},
    "p_in": {"edges": [1.5, 2.5], "probs": [1]},
    "p_id": [[1]],
    "geometry": [{
      "class_id": 1, "class_name": "dam",
      "aspect_ratio": {"edges": [1, 2], "probs": [1]},
      "scale": {"edges": [0.05, 0.1], "probs": [1]},
      "location": {"x_edges": [0, 0.5, 1], "y_edges": [0, 1], "probs": [0.5, 0.5]}
    }],
    "geometry_all": {
      "aspect_ratio": {"edges": [1, 2], "probs": [1]},
      "scale": {"edges": [0.05, 0.1], "probs": [1]},
      "location": {"x_edges": [0, 1], "y_edges": [0, 1], "probs": [1]}
    },
    "fit_config": {"aspect_bins": 1, "scale_bins": 1, "location_bins": [2, 1],
                   "min_samples": 20, "smoothing": 1e-6, "cooccurrence_prior": 1},
    "source_digest": "by hand"
  })");
  auto g = load_scdkg(path);
  EXPECT_EQ(g.class_count(), 1u);
  auto layout = sample_layout(g, {800, 800}, 1);
  EXPECT_EQ(layout.objects.size(), 2u);
  for (const auto& o : layout.objects) {
    EXPECT_EQ(o.class_name, "dam");
    EXPECT_GE(o.scale, 0.05);
    EXPECT_LT(o.scale, 0.1);
  }
}

TEST(SaveLoad, MissingFieldNamesPointer) {
  auto doc = scdkg_to_json(fit_scdkg(port_and_airfield(30)));
  doc["geometry"][1].erase("scale");
  doc.erase("checksum");
  try {
    scdkg_from_json(doc);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.pointer(), "/geometry/1/scale");
  }
}

}  // namespace
}  // namespace isimforge
