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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "isimforge/layout.hpp"
#include "isimforge/scdkg.hpp"

namespace isimforge {

inline constexpr std::size_t kMinFidelityLayouts = 100;

struct GeometryTv {
  double aspect = 0.0;
  double scale = 0.0;
  double location = 0.0;
  std::size_t samples = 0;
};

// Distances between a population of sampled layouts and the graph that is
// supposed to have produced them. Every value is a total variation distance
// in [0, 1].
struct FidelityReport {
  double tv_class = 0.0;   // first-object classes vs p_ic
  double tv_count = 0.0;   // layout sizes vs discretized p_in
  std::map<ClassId, GeometryTv> per_class_geom;
  double cooccurrence_tv = 0.0;
  std::size_t n_layouts = 0;

  // Means over the classes present in per_class_geom.
  double mean_aspect_tv() const;
  double mean_scale_tv() const;
  double mean_location_tv() const;
  double summed_tv() const;
};

// Throws InvalidInput for fewer than kMinFidelityLayouts layouts.
// `max_objects` is the ceiling the sampler applied to draws from p_in.
FidelityReport evaluate_fidelity(const Scdkg& g, const std::vector<Layout>& layouts,
                                 std::size_t max_objects = SamplerConfig{}.max_objects);

// Factors of the graph that can be switched off.
struct Factors {
  bool aspect = false;
  bool scale = false;
  bool location = false;
  bool p_id = false;

  static Factors all() { return {true, true, true, true}; }
  static Factors none() { return {}; }
  std::string label() const;

  friend bool operator==(const Factors&, const Factors&) = default;
};

// Copy of `g` with the `disabled` factors replaced by uninformed baselines:
// geometry factors by the pooled density, p_id by rows equal to p_ic.
Scdkg ablate(const Scdkg& g, Factors disabled);

struct AblationRow {
  int index = 0;       // 1-based, in table order
  Factors enabled;
};

// The nine enabled-factor combinations, from nothing to the full graph.
std::vector<AblationRow> ablation_grid();

nlohmann::json fidelity_json(const FidelityReport& r, const ClassTable& table);
std::string fidelity_table(const FidelityReport& r, const ClassTable& table);

// One line per grid row: enabled factors and per-axis distances.
std::string ablation_table(const std::vector<std::pair<AblationRow, FidelityReport>>& rows);

}  // namespace isimforge
