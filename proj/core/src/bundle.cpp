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

#include "isimforge/bundle.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <set>

#include "isimforge/canonical_json.hpp"
#include "isimforge/error.hpp"
#include "isimforge/isim.hpp"
#include "isimforge/parallel.hpp"
#include "isimforge/random.hpp"
#include "isimforge/sodi.hpp"

namespace isimforge {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& need(const json& obj, const char* key, const std::string& ptr) {
  if (!obj.is_object()) throw SchemaError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(ptr + "/" + key, "missing field");
  return *it;
}

template <typename T>
T get(const json& obj, const char* key, const std::string& ptr) {
  try {
    return need(obj, key, ptr).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(ptr + "/" + key, e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : ""));
  }
}

bool bundle_on_disk(const Bundle& b) {
  std::error_code ec;
  return fs::exists(b.isim_path(), ec) || fs::exists(b.sodi_path(), ec) ||
         fs::exists(b.labels_path(), ec);
}

json manifest_entry(const Bundle& b) {
  return {{"id", b.id},
          {"isim", b.isim_file()},
          {"sodi", b.sodi_file()},
          {"labels", b.labels_file()},
          {"seed", b.layout.seed},
          {"object_count", b.layout.objects.size()}};
}

std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string make_bundle_id(std::size_t index, std::uint64_t seed) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%06zu-%08" PRIx64, index, mix64(seed) >> 32);
  return buf;
}

json labels_json(const Layout& layout, const std::string& bundle_id) {
  json objects = json::array();
  for (const auto& o : layout.objects) {
    objects.push_back({{"class_name", o.class_name},
                       {"class_id", o.class_id},
                       {"gray_value", gray_value(o.class_id, layout.class_count)},
                       {"bbox_px", {static_cast<long long>(o.bbox.x_min),
                                    static_cast<long long>(o.bbox.y_min),
                                    static_cast<long long>(o.bbox.x_max),
                                    static_cast<long long>(o.bbox.y_max)}},
                       {"center_norm", {o.center.x, o.center.y}},
                       {"scale", o.scale},
                       {"aspect_ratio", o.aspect_ratio}});
  }
  return {{"schema", kLabelsSchema},
          {"bundle_id", bundle_id},
          {"image_size", {{"width", layout.image_size.width},
                          {"height", layout.image_size.height}}},
          {"seed", layout.seed},
          {"scdkg_digest", layout.scdkg_digest},
          {"class_table", layout.class_names},
          {"objects", std::move(objects)}};
}

Layout layout_from_labels(const json& doc) {
  if (get<std::string>(doc, "schema", "") != kLabelsSchema) {
    throw SchemaError("/schema", "unsupported schema");
  }
  Layout layout;
  const auto& size = need(doc, "image_size", "");
  layout.image_size = {get<int>(size, "width", "/image_size"),
                       get<int>(size, "height", "/image_size")};
  layout.seed = get<std::uint64_t>(doc, "seed", "");
  layout.scdkg_digest = get<std::string>(doc, "scdkg_digest", "");
  layout.class_names = get<std::vector<std::string>>(doc, "class_table", "");
  layout.class_count = layout.class_names.size();
  if (layout.class_count == 0 || layout.class_count > kMaxClasses) {
    throw SchemaError("/class_table", "class count outside 1..255");
  }
  const auto& objects = need(doc, "objects", "");
  if (!objects.is_array()) throw SchemaError("/objects", "expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string ptr = "/objects/" + std::to_string(i);
    const auto& o = objects[i];
    LayoutObject obj;
    obj.class_id = get<ClassId>(o, "class_id", ptr);
    if (obj.class_id == 0 || obj.class_id > layout.class_count) {
      throw SchemaError(ptr + "/class_id", "outside 1..M");
    }
    obj.class_name = get<std::string>(o, "class_name", ptr);
    if (obj.class_name != layout.class_names[obj.class_id - 1]) {
      throw SchemaError(ptr + "/class_name", "does not match class_table");
    }
    if (get<int>(o, "gray_value", ptr) != gray_value(obj.class_id, layout.class_count)) {
      throw SchemaError(ptr + "/gray_value", "inconsistent with class_id");
    }
    const auto bb = get<std::vector<double>>(o, "bbox_px", ptr);
    if (bb.size() != 4) throw SchemaError(ptr + "/bbox_px", "expected four numbers");
    obj.bbox = {bb[0], bb[1], bb[2], bb[3]};
    const auto c = get<std::vector<double>>(o, "center_norm", ptr);
    if (c.size() != 2) throw SchemaError(ptr + "/center_norm", "expected two numbers");
    obj.center = {c[0], c[1]};
    obj.scale = get<double>(o, "scale", ptr);
    obj.aspect_ratio = get<double>(o, "aspect_ratio", ptr);
    layout.objects.push_back(std::move(obj));
  }
  return layout;
}

Bundle write_bundle_files(const Layout& layout, const fs::path& out_dir,
                          std::size_t index, ExistingPolicy policy) {
  Bundle b{make_bundle_id(index, layout.seed), out_dir, layout};
  ensure_dir(out_dir);
  if (bundle_on_disk(b)) {
    if (policy == ExistingPolicy::kResume) return b;
    if (policy == ExistingPolicy::kFail) {
      throw IoError("bundle " + b.id + " already exists in " + out_dir.string() +
                    " (use --overwrite or --resume)");
    }
  }
  const auto prompt = generate_sodi(layout);
  write_png(b.isim_path(), render_isim(layout));
  write_file(b.sodi_path(), prompt.text + "\n");
  write_file(b.labels_path(), canonical_dump(labels_json(layout, b.id), 2) + "\n");
  return b;
}

void update_manifest(const fs::path& out_dir, const ManifestHeader& header,
                     const std::vector<Bundle>& bundles) {
  ensure_dir(out_dir);
  const fs::path path = out_dir / kManifestName;
  std::map<std::string, json> entries;
  std::error_code ec;
  if (fs::exists(path, ec)) {
    json old;
    try {
      old = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
    if (old.contains("scdkg_digest") && old["scdkg_digest"] != header.scdkg_digest) {
      throw InvalidInput(path.string() + " belongs to a different SCDKG");
    }
    if (old.contains("bundles") && old["bundles"].is_array()) {
      for (const auto& e : old["bundles"]) {
        if (e.contains("id") && e["id"].is_string()) {
          entries[e["id"].get<std::string>()] = e;
        }
      }
    }
  }
  for (const auto& b : bundles) entries[b.id] = manifest_entry(b);
  json list = json::array();
  for (auto& [id, e] : entries) list.push_back(std::move(e));
  json doc = {{"format_version", kManifestFormatVersion},
              {"schema", kLabelsSchema},
              {"scdkg_digest", header.scdkg_digest},
              {"image_size", {{"width", header.image_size.width},
                              {"height", header.image_size.height}}},
              {"cfg", header.config},
              {"bundles", std::move(list)}};
  write_file(path, canonical_dump(doc, 2) + "\n");
}

Bundle export_bundle(const Layout& layout, const fs::path& out_dir,
                     std::size_t index, ExistingPolicy policy) {
  Bundle b = write_bundle_files(layout, out_dir, index, policy);
  update_manifest(out_dir, {layout.scdkg_digest, layout.image_size, json::object()},
                  {b});
  return b;
}

std::vector<Bundle> export_batch(const std::vector<Layout>& layouts,
                                 const fs::path& out_dir, const ManifestHeader& header,
                                 ExistingPolicy policy, std::size_t jobs,
                                 std::size_t first_index) {
  ensure_dir(out_dir);
  std::vector<Bundle> bundles(layouts.size());
  parallel_for(layouts.size(), jobs, [&](std::size_t i) {
    bundles[i] = write_bundle_files(layouts[i], out_dir, first_index + i, policy);
  });
  update_manifest(out_dir, header, bundles);
  return bundles;
}

VerifyReport verify_bundle(const fs::path& dir, const std::string& id, double floor) {
  VerifyReport report;
  report.bundle_id = id;
  const Bundle paths{id, dir, {}};

  Layout layout;
  try {
    load_json_labels(paths.labels_path());
    layout = layout_from_labels(json::parse(read_file(paths.labels_path())));
  } catch (const std::exception& e) {
    report.violations.push_back("labels: " + std::string(e.what()));
    return report;
  }

  // SODI against the listed counts.
  try {
    std::string text = read_file(paths.sodi_path());
    if (text.empty() || text.back() != '\n') {
      report.violations.push_back("sodi: missing trailing newline");
    } else {
      text.pop_back();
      const auto table = ClassTable::from_names(layout.class_names);
      const auto parsed = parse_sodi(text, table);
      auto expected = count_objects(layout);
      // Parsed ids come from the canonical table; compare by name and count.
      bool same = parsed.size() == expected.size();
      for (std::size_t i = 0; same && i < parsed.size(); ++i) {
        same = parsed[i].class_name == expected[i].class_name &&
               parsed[i].count == expected[i].count;
      }
      report.sodi_consistent = same;
      if (!same) {
        report.violations.push_back("sodi: counts differ from labels (expected \"" +
                                    (expected.empty() ? std::string()
                                                      : sodi_from_counts(expected).text) +
                                    "\")");
      }
    }
  } catch (const std::exception& e) {
    report.violations.push_back("sodi: " + std::string(e.what()));
  }

  IsimRaster raster;
  std::vector<DecodedRegion> regions;
  try {
    raster = read_png(paths.isim_path(), layout.class_count);
    if (raster.width != layout.image_size.width ||
        raster.height != layout.image_size.height) {
      report.violations.push_back("isim: raster size differs from labels");
      return report;
    }
    regions = decode_isim(raster, layout.class_count);
  } catch (const std::exception& e) {
    report.violations.push_back("isim: " + std::string(e.what()));
    return report;
  }

  // acc_c: box dominated by the object's own gray.
  std::size_t correct = 0;
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    const auto& o = layout.objects[i];
    const auto v = gray_value(o.class_id, layout.class_count);
    const int x0 = std::clamp(static_cast<int>(o.bbox.x_min), 0, raster.width);
    const int x1 = std::clamp(static_cast<int>(o.bbox.x_max), 0, raster.width);
    const int y0 = std::clamp(static_cast<int>(o.bbox.y_min), 0, raster.height);
    const int y1 = std::clamp(static_cast<int>(o.bbox.y_max), 0, raster.height);
    std::size_t hits = 0;
    const std::size_t area = static_cast<std::size_t>(std::max(0, x1 - x0)) *
                             static_cast<std::size_t>(std::max(0, y1 - y0));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) hits += raster.at(x, y) == v;
    const double share = area ? static_cast<double>(hits) / area : 0.0;
    if (share > kDominanceThreshold) {
      ++correct;
      if (hits < area) {
        report.notes.push_back("object " + std::to_string(i) + " partially occluded (" +
                               format_fraction(share) + " visible)");
      }
    } else {
      report.notes.push_back("object " + std::to_string(i) + " (" + o.class_name +
                             ") not dominant in its box (" + format_fraction(share) + ")");
    }
  }
  report.acc_c = layout.objects.empty()
                     ? 1.0
                     : static_cast<double>(correct) / layout.objects.size();

  // acc_n: per-class agreement between decoded regions and listed objects.
  std::map<ClassId, std::pair<std::size_t, std::size_t>> per_class;
  for (const auto& o : layout.objects) ++per_class[o.class_id].second;
  for (const auto& r : regions) ++per_class[r.class_id].first;
  double acc_sum = 0.0;
  for (const auto& [m, c] : per_class) {
    const auto [decoded, listed] = c;
    acc_sum += static_cast<double>(std::min(decoded, listed)) /
               static_cast<double>(std::max(decoded, listed));
    if (decoded != listed) {
      report.notes.push_back("class " + layout.class_names[m - 1] + ": " +
                             std::to_string(decoded) + " regions for " +
                             std::to_string(listed) + " objects");
    }
  }
  report.acc_n = per_class.empty() ? 1.0 : acc_sum / per_class.size();

  if (report.acc_c < floor) {
    report.violations.push_back("acc_c " + format_fraction(report.acc_c) +
                                " below floor " + format_fraction(floor));
  }
  if (report.acc_n < floor) {
    report.violations.push_back("acc_n " + format_fraction(report.acc_n) +
                                " below floor " + format_fraction(floor));
  }
  return report;
}

std::vector<std::string> list_bundles(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::set<std::string> ids;
  const fs::path manifest = dir / kManifestName;
  if (fs::exists(manifest, ec)) {
    json doc;
    try {
      doc = json::parse(read_file(manifest));
    } catch (const json::parse_error& e) {
      throw IoError(manifest.string() + ": invalid JSON: " + e.what());
    }
    for (const auto& e : need(doc, "bundles", "")) {
      ids.insert(get<std::string>(e, "id", "/bundles"));
    }
    return {ids.begin(), ids.end()};
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    constexpr std::string_view suffix = ".labels.json";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      ids.insert(name.substr(0, name.size() - suffix.size()));
    }
  }
  return {ids.begin(), ids.end()};
}

}  // namespace isimforge
