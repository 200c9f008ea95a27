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

#include "isimforge/canonical_json.hpp"
#include "isimforge/error.hpp"

namespace isimforge {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kWiden = 1e-9;

Interval scale_support(std::span<const double> xs) {
  auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  Interval s{*mn, std::min(*mx + kWiden, 1.0)};
  if (!(s.hi > s.lo)) s.lo = s.hi - kWiden;
  return s;
}

struct GeometrySamples {
  std::vector<double> aspect;
  std::vector<double> scale;
  std::vector<Point2> center;

  void add(const BoxPx& box, ImageSize size) {
    const double w = box.width();
    const double h = box.height();
    aspect.push_back(w / h);
    scale.push_back(std::min(std::sqrt(w * h) / size.width, 1.0));
    center.push_back({std::clamp(0.5 * (box.x_min + box.x_max) / size.width, 0.0, 1.0),
                      std::clamp(0.5 * (box.y_min + box.y_max) / size.height, 0.0, 1.0)});
  }
  std::size_t size() const noexcept { return aspect.size(); }
};

ClassGeometry fit_geometry(const GeometrySamples& s, const FitConfig& cfg) {
  return ClassGeometry{
      fit_1d(s.aspect, cfg.aspect_bins, std::nullopt, cfg.smoothing),
      fit_1d(s.scale, cfg.scale_bins, scale_support(s.scale), cfg.smoothing),
      fit_2d(s.center, cfg.location_bins_x, cfg.location_bins_y,
             std::pair{Interval{0.0, 1.0}, Interval{0.0, 1.0}}, cfg.smoothing)};
}

std::string dataset_digest(const DatasetSummary& ds) {
  std::vector<const ImageRecord*> order;
  for (const auto& img : ds.images) order.push_back(&img);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
    return a->image_id < b->image_id;
  });
  json doc = json::array();
  for (const auto* img : order) {
    std::vector<std::tuple<std::string, BoxPx>> objs;
    for (const auto& a : img->objects) objs.emplace_back(a.class_name, a.bbox);
    std::sort(objs.begin(), objs.end());
    json jo = json::array();
    for (const auto& [name, b] : objs) {
      jo.push_back({name, b.x_min, b.y_min, b.x_max, b.y_max});
    }
    doc.push_back({img->image_id, img->size.width, img->size.height, jo});
  }
  return sha256_hex(canonical_dump(doc));
}

json density_json(const Density1D& d) {
  return {{"edges", d.edges()}, {"probs", d.probs()}};
}

json density_json(const Density2D& d) {
  return {{"x_edges", d.x_edges()}, {"y_edges", d.y_edges()}, {"probs", d.probs()}};
}

json geometry_json(const ClassGeometry& g) {
  return {{"aspect_ratio", density_json(g.aspect_ratio)},
          {"scale", density_json(g.scale)},
          {"location", density_json(g.location)}};
}

json body_json(const Scdkg& g) {
  json doc;
  doc["format_version"] = kScdkgFormatVersion;
  doc["class_table"] = g.class_table.names();
  doc["p_ic"] = {{"labels", g.p_ic.labels()}, {"probs", g.p_ic.probs()}};
  doc["p_in"] = density_json(g.p_in);
  json rows = json::array();
  for (std::size_t r = 0; r < g.p_id.size(); ++r) {
    auto row = g.p_id.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["p_id"] = std::move(rows);
  json geo = json::array();
  for (std::size_t m = 0; m < g.geometry.size(); ++m) {
    json entry = geometry_json(g.geometry[m]);
    entry["class_id"] = m + 1;
    entry["class_name"] = g.class_table.names()[m];
    geo.push_back(std::move(entry));
  }
  doc["geometry"] = std::move(geo);
  doc["geometry_all"] = geometry_json(g.geometry_all);
  const auto& c = g.fit_config;
  doc["fit_config"] = {{"aspect_bins", c.aspect_bins},
                       {"scale_bins", c.scale_bins},
                       {"location_bins", {c.location_bins_x, c.location_bins_y}},
                       {"min_samples", c.min_samples},
                       {"smoothing", c.smoothing},
                       {"cooccurrence_prior", c.cooccurrence_prior}};
  doc["source_digest"] = g.source_digest;
  return doc;
}

// Typed field access that reports the JSON pointer of bad fields.
const json& field(const json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.is_object()) throw SchemaError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(ptr + "/" + key, "missing field");
  return *it;
}

template <typename T>
std::vector<T> vec(const json& obj, const std::string& key, const std::string& ptr) {
  const auto& v = field(obj, key, ptr);
  if (!v.is_array()) throw SchemaError(ptr + "/" + key, "expected an array");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw SchemaError(ptr + "/" + key, e.what());
  }
}

template <typename T>
T scalar(const json& obj, const std::string& key, const std::string& ptr) {
  const auto& v = field(obj, key, ptr);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(ptr + "/" + key, e.what());
  }
}

template <typename Fn>
auto at_pointer(const std::string& ptr, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw SchemaError(ptr, e.what());
  }
}

Density1D density1d_from(const json& obj, const std::string& key,
                         const std::string& ptr) {
  const auto& d = field(obj, key, ptr);
  const std::string p = ptr + "/" + key;
  return at_pointer(p, [&] {
    return Density1D(vec<double>(d, "edges", p), vec<double>(d, "probs", p));
  });
}

Density2D density2d_from(const json& obj, const std::string& key,
                         const std::string& ptr) {
  const auto& d = field(obj, key, ptr);
  const std::string p = ptr + "/" + key;
  return at_pointer(p, [&] {
    return Density2D(vec<double>(d, "x_edges", p), vec<double>(d, "y_edges", p),
                     vec<double>(d, "probs", p));
  });
}

ClassGeometry geometry_from(const json& obj, const std::string& ptr) {
  return ClassGeometry{density1d_from(obj, "aspect_ratio", ptr),
                       density1d_from(obj, "scale", ptr),
                       density2d_from(obj, "location", ptr)};
}

void check_geometry(const ClassGeometry& g, const std::string& where) {
  if (!(g.aspect_ratio.support().lo > 0.0)) {
    throw InvalidInput(where + ": aspect ratio support must be positive");
  }
  const auto s = g.scale.support();
  if (!(s.lo > 0.0) || s.hi > 1.0) {
    throw InvalidInput(where + ": scale support must lie in (0, 1]");
  }
  const auto& xe = g.location.x_edges();
  const auto& ye = g.location.y_edges();
  if (xe.front() < 0.0 || xe.back() > 1.0 || ye.front() < 0.0 || ye.back() > 1.0) {
    throw InvalidInput(where + ": location support must lie in [0, 1]^2");
  }
}

}  // namespace

Categorical Scdkg::transition_from(ClassId m) const {
  const std::size_t n = class_count();
  std::vector<std::uint32_t> labels(n);
  std::iota(labels.begin(), labels.end(), 1u);
  auto row = p_id.row(m - 1);
  return Categorical(std::move(labels), std::vector<double>(row.begin(), row.end()));
}

void Scdkg::validate() const {
  const std::size_t n = class_count();
  if (n == 0) throw InvalidInput("graph has no classes");
  if (n > kMaxClasses) throw InvalidInput("graph has more than 255 classes");
  if (p_ic.size() != n) throw InvalidInput("p_ic does not cover every class");
  for (std::size_t i = 0; i < n; ++i) {
    if (p_ic.labels()[i] != i + 1) {
      throw InvalidInput("p_ic labels must be the class ids 1..M in order");
    }
  }
  if (!(p_in.support().hi > 0.5)) {
    throw InvalidInput("p_in support lies entirely below one instance");
  }
  if (geometry.size() != n) {
    throw InvalidInput("geometry does not cover every class");
  }
  for (std::size_t m = 0; m < n; ++m) {
    check_geometry(geometry[m], "geometry of class " + std::to_string(m + 1));
  }
  check_geometry(geometry_all, "geometry_all");
  if (p_id.size() != n) throw InvalidInput("p_id must be M x M");
  for (std::size_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (double v : p_id.row(r)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidInput("p_id row " + std::to_string(r + 1) +
                           " has a negative entry");
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kMassTolerance) {
      throw InvalidInput("p_id row " + std::to_string(r + 1) +
                         ": row not stochastic (sums to " + std::to_string(total) + ")");
    }
  }
}

SquareMatrix cooccurrence_counts(
    std::size_t class_count,
    const std::vector<std::vector<ClassId>>& classes_per_image) {
  SquareMatrix counts(class_count);
  std::vector<std::size_t> per_class(class_count);
  for (const auto& ids : classes_per_image) {
    std::fill(per_class.begin(), per_class.end(), 0);
    for (ClassId m : ids) ++per_class.at(m - 1);
    for (std::size_t a = 0; a < class_count; ++a) {
      if (per_class[a] == 0) continue;
      for (std::size_t b = 0; b < class_count; ++b) {
        const bool present = a == b ? per_class[a] >= 2 : per_class[b] >= 1;
        if (present) counts(a, b) += 1.0;
      }
    }
  }
  return counts;
}

SquareMatrix row_normalize(const SquareMatrix& counts, double prior) {
  const std::size_t n = counts.size();
  SquareMatrix out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += counts(r, c) + prior;
    for (std::size_t c = 0; c < n; ++c) {
      // A row with no evidence and no prior becomes uniform.
      out(r, c) = total > 0.0 ? (counts(r, c) + prior) / total
                              : 1.0 / static_cast<double>(n);
    }
  }
  return out;
}

Density1D fit_count_density(std::span<const double> counts, double smoothing) {
  if (counts.empty()) throw InvalidInput("cannot fit empty density");
  auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  const auto lo = static_cast<long long>(std::llround(*mn));
  const auto hi = static_cast<long long>(std::llround(*mx));
  std::vector<double> edges;
  for (long long k = lo; k <= hi + 1; ++k) edges.push_back(static_cast<double>(k) - 0.5);
  return fit_1d_on_edges(counts, std::move(edges), smoothing);
}

Scdkg fit_scdkg(const DatasetSummary& ds, const FitConfig& cfg) {
  const std::size_t n = ds.class_count();
  if (n == 0 || ds.annotation_count() == 0) {
    throw InvalidInput("cannot fit a graph on an empty dataset");
  }
  if (cfg.cooccurrence_prior < 0.0) {
    throw InvalidInput("co-occurrence prior must be nonnegative");
  }

  std::vector<double> class_freq(n, 0.0);
  std::vector<double> image_counts;
  std::vector<GeometrySamples> per_class(n);
  GeometrySamples pooled;
  std::vector<std::vector<ClassId>> classes_per_image;

  for (const auto& img : ds.images) {
    if (img.objects.empty()) continue;
    image_counts.push_back(static_cast<double>(img.objects.size()));
    auto& ids = classes_per_image.emplace_back();
    for (const auto& ann : img.objects) {
      auto id = ds.class_table.id_of(ann.class_name);
      if (!id) throw InvalidInput("class not in table: " + ann.class_name);
      ids.push_back(*id);
      class_freq[*id - 1] += 1.0;
      per_class[*id - 1].add(ann.bbox, img.size);
      pooled.add(ann.bbox, img.size);
    }
  }

  const double total = std::accumulate(class_freq.begin(), class_freq.end(), 0.0);
  std::vector<std::uint32_t> labels(n);
  std::iota(labels.begin(), labels.end(), 1u);
  for (double& f : class_freq) f /= total;

  ClassGeometry all = fit_geometry(pooled, cfg);
  std::vector<ClassGeometry> geometry;
  geometry.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const auto& s = per_class[m];
    geometry.push_back(s.size() > 0 && s.size() >= cfg.min_samples
                           ? fit_geometry(s, cfg)
                           : all);
  }

  Scdkg g{ds.class_table,
          Categorical(std::move(labels), std::move(class_freq)),
          fit_count_density(image_counts, cfg.smoothing),
          std::move(geometry),
          std::move(all),
          row_normalize(cooccurrence_counts(n, classes_per_image),
                        cfg.cooccurrence_prior),
          cfg,
          dataset_digest(ds)};
  g.validate();
  return g;
}

json scdkg_to_json(const Scdkg& g) {
  json doc = body_json(g);
  doc["checksum"] = sha256_hex(canonical_dump(doc));
  return doc;
}

std::string scdkg_digest(const Scdkg& g) {
  return sha256_hex(canonical_dump(body_json(g)));
}

Scdkg scdkg_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "expected an object");
  const int version = scalar<int>(doc, "format_version", "");
  if (version != kScdkgFormatVersion) {
    throw InvalidInput("version mismatch: file has format_version " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kScdkgFormatVersion));
  }
  const auto names = vec<std::string>(doc, "class_table", "");
  ClassTable table = at_pointer("/class_table", [&] { return ClassTable::from_names(names); });
  if (table.names() != names) {
    throw SchemaError("/class_table", "names must be canonical, unique and sorted");
  }
  const std::size_t n = table.size();

  const auto& pic = field(doc, "p_ic", "");
  Categorical p_ic = at_pointer("/p_ic", [&] {
    return Categorical(vec<std::uint32_t>(pic, "labels", "/p_ic"),
                       vec<double>(pic, "probs", "/p_ic"));
  });
  Density1D p_in = density1d_from(doc, "p_in", "");

  const auto rows = vec<std::vector<double>>(doc, "p_id", "");
  SquareMatrix p_id(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.size()) {
      throw SchemaError("/p_id/" + std::to_string(r), "p_id must be square");
    }
    for (std::size_t c = 0; c < rows.size(); ++c) p_id(r, c) = rows[r][c];
  }

  const auto& geo = field(doc, "geometry", "");
  if (!geo.is_array()) throw SchemaError("/geometry", "expected an array");
  std::vector<ClassGeometry> geometry;
  for (std::size_t i = 0; i < geo.size(); ++i) {
    const std::string ptr = "/geometry/" + std::to_string(i);
    const auto id = scalar<std::size_t>(geo[i], "class_id", ptr);
    if (id != i + 1) throw SchemaError(ptr + "/class_id", "geometry must be ordered by class id");
    if (id <= n && scalar<std::string>(geo[i], "class_name", ptr) != names[id - 1]) {
      throw SchemaError(ptr + "/class_name", "does not match class_table");
    }
    geometry.push_back(geometry_from(geo[i], ptr));
  }
  ClassGeometry all = geometry_from(field(doc, "geometry_all", ""), "/geometry_all");

  FitConfig cfg;
  const auto& fc = field(doc, "fit_config", "");
  cfg.aspect_bins = scalar<std::size_t>(fc, "aspect_bins", "/fit_config");
  cfg.scale_bins = scalar<std::size_t>(fc, "scale_bins", "/fit_config");
  const auto loc = vec<std::size_t>(fc, "location_bins", "/fit_config");
  if (loc.size() != 2) throw SchemaError("/fit_config/location_bins", "expected [bins_x, bins_y]");
  cfg.location_bins_x = loc[0];
  cfg.location_bins_y = loc[1];
  cfg.min_samples = scalar<std::size_t>(fc, "min_samples", "/fit_config");
  cfg.smoothing = scalar<double>(fc, "smoothing", "/fit_config");
  cfg.cooccurrence_prior = scalar<double>(fc, "cooccurrence_prior", "/fit_config");

  Scdkg g{std::move(table), std::move(p_ic),     std::move(p_in),
          std::move(geometry), std::move(all),   std::move(p_id),
          cfg,                scalar<std::string>(doc, "source_digest", "")};
  g.validate();

  // Hand-written graphs may omit the checksum; a present one must match.
  if (auto it = doc.find("checksum"); it != doc.end()) {
    if (!it->is_string()) throw SchemaError("/checksum", "expected a string");
    json body = doc;
    body.erase("checksum");
    if (sha256_hex(canonical_dump(body)) != it->get<std::string>()) {
      throw InvalidInput("checksum mismatch: graph file was modified");
    }
  }
  return g;
}

void save_scdkg(const Scdkg& g, const fs::path& path) {
  g.validate();
  write_file(path, canonical_dump(scdkg_to_json(g)) + "\n");
}

Scdkg load_scdkg(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": invalid JSON: " + e.what());
  }
  return scdkg_from_json(doc);
}

}  // namespace isimforge
