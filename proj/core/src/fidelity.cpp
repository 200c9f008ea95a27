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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "isimforge/error.hpp"

namespace isimforge {
using nlohmann::json;

namespace {

// TV between the empirical histogram of `xs` on `d`'s edges and `d`.
// Samples outside the support count as mass the density does not have.
double tv_against(const Density1D& d, const std::vector<double>& xs) {
  std::vector<double> hist(d.bins(), 0.0);
  double outside = 0.0;
  for (double x : xs) {
    if (auto b = d.bin_of(x)) hist[*b] += 1.0; else outside += 1.0;
  }
  const double n = static_cast<double>(xs.size());
  double l1 = outside / n;
  for (std::size_t i = 0; i < hist.size(); ++i) l1 += std::abs(hist[i] / n - d.probs()[i]);
  return 0.5 * l1;
}

double tv_against(const Density2D& d, const std::vector<Point2>& ps) {
  std::vector<double> hist(d.probs().size(), 0.0);
  double outside = 0.0;
  for (const auto& p : ps) {
    if (auto c = d.cell_of(p)) hist[*c] += 1.0; else outside += 1.0;
  }
  const double n = static_cast<double>(ps.size());
  double l1 = outside / n;
  for (std::size_t i = 0; i < hist.size(); ++i) l1 += std::abs(hist[i] / n - d.probs()[i]);
  return 0.5 * l1;
}

// Distribution of clamp(round(X), 1, max_objects) for X ~ p_in.
std::map<long long, double> discretize_counts(const Density1D& p_in,
                                              std::size_t max_objects) {
  std::map<long long, double> mass;
  const auto& e = p_in.edges();
  const auto cap = static_cast<long long>(max_objects);
  for (std::size_t i = 0; i < p_in.bins(); ++i) {
    const double a = e[i], b = e[i + 1], p = p_in.probs()[i];
    if (p == 0.0) continue;
    // X in [k - 0.5, k + 0.5) rounds to k.
    for (auto k = static_cast<long long>(std::floor(a + 0.5));
         static_cast<double>(k) - 0.5 < b; ++k) {
      const double overlap = std::min(b, k + 0.5) - std::max(a, k - 0.5);
      if (overlap <= 0.0) continue;
      mass[std::clamp(k, 1LL, cap)] += p * overlap / (b - a);
    }
  }
  return mass;
}

double mean_of(const std::map<ClassId, GeometryTv>& m, double GeometryTv::*field) {
  if (m.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [id, g] : m) s += g.*field;
  return s / static_cast<double>(m.size());
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double FidelityReport::mean_aspect_tv() const { return mean_of(per_class_geom, &GeometryTv::aspect); }
double FidelityReport::mean_scale_tv() const { return mean_of(per_class_geom, &GeometryTv::scale); }
double FidelityReport::mean_location_tv() const { return mean_of(per_class_geom, &GeometryTv::location); }

double FidelityReport::summed_tv() const {
  return tv_class + tv_count + mean_aspect_tv() + mean_scale_tv() + mean_location_tv() +
         cooccurrence_tv;
}

FidelityReport evaluate_fidelity(const Scdkg& g, const std::vector<Layout>& layouts,
                                 std::size_t max_objects) {
  if (layouts.size() < kMinFidelityLayouts) {
    throw InvalidInput("fidelity needs at least " + std::to_string(kMinFidelityLayouts) +
                       " layouts, got " + std::to_string(layouts.size()));
  }
  const std::size_t m_count = g.class_count();
  FidelityReport r;
  r.n_layouts = layouts.size();

  std::vector<double> first(m_count, 0.0);
  std::map<long long, double> sizes;
  struct Samples {
    std::vector<double> aspect, scale;
    std::vector<Point2> center;
  };
  std::vector<Samples> per_class(m_count);
  std::vector<std::vector<ClassId>> classes_per_layout;
  classes_per_layout.reserve(layouts.size());

  for (const auto& layout : layouts) {
    if (layout.objects.empty()) throw InvalidInput("fidelity: empty layout");
    sizes[static_cast<long long>(layout.objects.size())] += 1.0;
    auto& ids = classes_per_layout.emplace_back();
    for (const auto& o : layout.objects) {
      if (o.class_id == 0 || o.class_id > m_count) {
        throw InvalidInput("fidelity: layout class id outside the graph");
      }
      ids.push_back(o.class_id);
      auto& s = per_class[o.class_id - 1];
      s.aspect.push_back(o.aspect_ratio);
      s.scale.push_back(o.scale);
      s.center.push_back(o.center);
    }
    first[layout.objects.front().class_id - 1] += 1.0;
  }
  const double n = static_cast<double>(layouts.size());
  for (double& f : first) f /= n;
  r.tv_class = total_variation(first, g.p_ic.probs());

  auto expected = discretize_counts(g.p_in, max_objects);
  for (auto& [k, c] : sizes) expected.try_emplace(k, 0.0);
  double l1 = 0.0;
  for (const auto& [k, p] : expected) {
    auto it = sizes.find(k);
    l1 += std::abs((it == sizes.end() ? 0.0 : it->second / n) - p);
  }
  r.tv_count = 0.5 * l1;

  for (std::size_t m = 0; m < m_count; ++m) {
    const auto& s = per_class[m];
    if (s.aspect.empty()) continue;
    const auto& geo = g.geometry[m];
    r.per_class_geom[static_cast<ClassId>(m + 1)] = {
        tv_against(geo.aspect_ratio, s.aspect), tv_against(geo.scale, s.scale),
        tv_against(geo.location, s.center), s.aspect.size()};
  }

  const auto sampled = row_normalize(cooccurrence_counts(m_count, classes_per_layout),
                                     g.fit_config.cooccurrence_prior);
  double co = 0.0;
  for (std::size_t row = 0; row < m_count; ++row) {
    co += total_variation(sampled.row(row), g.p_id.row(row));
  }
  r.cooccurrence_tv = co / static_cast<double>(m_count);
  return r;
}

std::string Factors::label() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(aspect, "aspect");
  add(scale, "scale");
  add(location, "location");
  add(p_id, "p_id");
  return s.empty() ? "none" : s;
}

Scdkg ablate(const Scdkg& g, Factors disabled) {
  Scdkg out = g;
  for (auto& geo : out.geometry) {
    if (disabled.aspect) geo.aspect_ratio = g.geometry_all.aspect_ratio;
    if (disabled.scale) geo.scale = g.geometry_all.scale;
    if (disabled.location) geo.location = g.geometry_all.location;
  }
  if (disabled.p_id) {
    const std::size_t n = g.class_count();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) out.p_id(r, c) = g.p_ic.probs()[c];
  }
  return out;
}

std::vector<AblationRow> ablation_grid() {
  // enabled: aspect, scale, location, p_id
  return {{1, {false, false, false, false}}, {2, {false, false, false, true}},
          {3, {true, false, false, true}},   {4, {false, true, false, true}},
          {5, {false, false, true, true}},   {6, {true, true, false, true}},
          {7, {false, true, true, true}},    {8, {true, false, true, true}},
          {9, {true, true, true, true}}};
}

json fidelity_json(const FidelityReport& r, const ClassTable& table) {
  json per_class = json::object();
  for (const auto& [id, g] : r.per_class_geom) {
    per_class[table.name_of(id)] = {{"class_id", id},
                                    {"tv_aspect", g.aspect},
                                    {"tv_scale", g.scale},
                                    {"tv_location", g.location},
                                    {"samples", g.samples}};
  }
  return {{"n_layouts", r.n_layouts},
          {"tv_class", r.tv_class},
          {"tv_count", r.tv_count},
          {"cooccurrence_tv", r.cooccurrence_tv},
          {"mean_tv_aspect", r.mean_aspect_tv()},
          {"mean_tv_scale", r.mean_scale_tv()},
          {"mean_tv_location", r.mean_location_tv()},
          {"summed_tv", r.summed_tv()},
          {"per_class_geom", std::move(per_class)}};
}

std::string fidelity_table(const FidelityReport& r, const ClassTable& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "layouts %zu  tv_class %s  tv_count %s  cooccurrence %s\n",
                r.n_layouts, fixed(r.tv_class).c_str(), fixed(r.tv_count).c_str(),
                fixed(r.cooccurrence_tv).c_str());
  out << line;
  std::size_t width = 5;
  for (const auto& [id, g] : r.per_class_geom) width = std::max(width, table.name_of(id).size());
  std::snprintf(line, sizeof line, "%-*s %8s %8s %8s %8s\n", static_cast<int>(width), "class",
                "samples", "aspect", "scale", "location");
  out << line;
  for (const auto& [id, g] : r.per_class_geom) {
    std::snprintf(line, sizeof line, "%-*s %8zu %8s %8s %8s\n", static_cast<int>(width),
                  table.name_of(id).c_str(), g.samples, fixed(g.aspect).c_str(),
                  fixed(g.scale).c_str(), fixed(g.location).c_str());
    out << line;
  }
  return out.str();
}

std::string ablation_table(const std::vector<std::pair<AblationRow, FidelityReport>>& rows) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line, "%-2s %-6s %-5s %-8s %-4s | %8s %8s %8s %8s %8s %8s %8s\n",
                "#", "aspect", "scale", "location", "p_id", "class", "count", "aspect",
                "scale", "location", "co-occ", "sum");
  out << line;
  for (const auto& [row, r] : rows) {
    auto mark = [](bool on) { return on ? "x" : ""; };
    std::snprintf(line, sizeof line,
                  "%-2d %-6s %-5s %-8s %-4s | %8s %8s %8s %8s %8s %8s %8s\n", row.index,
                  mark(row.enabled.aspect), mark(row.enabled.scale),
                  mark(row.enabled.location), mark(row.enabled.p_id),
                  fixed(r.tv_class).c_str(), fixed(r.tv_count).c_str(),
                  fixed(r.mean_aspect_tv()).c_str(), fixed(r.mean_scale_tv()).c_str(),
                  fixed(r.mean_location_tv()).c_str(), fixed(r.cooccurrence_tv).c_str(),
                  fixed(r.summed_tv()).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace isimforge
