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

#include "isimforge/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "isimforge/canonical_json.hpp"
#include "isimforge/error.hpp"
#include "isimforge/isim.hpp"

namespace isimforge {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

constexpr double kMinBoxArea = 4.0;

double parse_number(const std::string& text, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
  try {
    v = std::stod(trimmed, &used);
  } catch (const std::exception&) {
    throw InvalidInput("field " + field + " is not a number: '" + text + "'");
  }
  if (used != trimmed.size() || !std::isfinite(v)) {
    throw InvalidInput("field " + field + " is not a number: '" + text + "'");
  }
  return v;
}

// Clamps `box` into the frame. Returns false when the box must be dropped.
bool sanitize_box(BoxPx& box, ImageSize size, const std::string& source,
                  std::vector<Diagnostic>& warnings) {
  if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max)) {
    warnings.push_back({source, "dropped inverted or empty box"});
    return false;
  }
  BoxPx clamped{std::clamp(box.x_min, 0.0, static_cast<double>(size.width)),
                std::clamp(box.y_min, 0.0, static_cast<double>(size.height)),
                std::clamp(box.x_max, 0.0, static_cast<double>(size.width)),
                std::clamp(box.y_max, 0.0, static_cast<double>(size.height))};
  if (clamped != box) {
    warnings.push_back({source, "box clamped to image extent"});
    box = clamped;
  }
  if (!(box.width() > 0.0) || !(box.height() > 0.0) ||
      box.area() < kMinBoxArea) {
    warnings.push_back({source, "dropped box with area below 4 px^2"});
    return false;
  }
  return true;
}

BoxPx read_bndbox(const pt::ptree& obj) {
  if (auto bnd = obj.get_child_optional("bndbox")) {
    return {parse_number(bnd->get<std::string>("xmin"), "xmin"),
            parse_number(bnd->get<std::string>("ymin"), "ymin"),
            parse_number(bnd->get<std::string>("xmax"), "xmax"),
            parse_number(bnd->get<std::string>("ymax"), "ymax")};
  }
  // Oriented boxes are reduced to their axis-aligned envelope.
  if (auto rob = obj.get_child_optional("robndbox")) {
    static const char* kCorners[4][2] = {{"x_left_top", "y_left_top"},
                                         {"x_right_top", "y_right_top"},
                                         {"x_right_bottom", "y_right_bottom"},
                                         {"x_left_bottom", "y_left_bottom"}};
    BoxPx env{INFINITY, INFINITY, -INFINITY, -INFINITY};
    for (const auto& c : kCorners) {
      const double x = parse_number(rob->get<std::string>(c[0]), c[0]);
      const double y = parse_number(rob->get<std::string>(c[1]), c[1]);
      env.x_min = std::min(env.x_min, x);
      env.y_min = std::min(env.y_min, y);
      env.x_max = std::max(env.x_max, x);
      env.y_max = std::max(env.y_max, y);
    }
    return env;
  }
  throw InvalidInput("object without bndbox or robndbox");
}

ImageRecord parse_voc_file(const fs::path& file,
                           std::vector<Diagnostic>& warnings) {
  pt::ptree tree;
  std::istringstream in(read_file(file));
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw InvalidInput(std::string("malformed XML: ") + e.message());
  }
  const auto& root = tree.get_child_optional("annotation") ? tree.get_child("annotation") : tree;
  ImageRecord image;
  image.image_id = file.stem().string();
  try {
    image.size.width = static_cast<int>(
        parse_number(root.get<std::string>("size.width"), "size/width"));
    image.size.height = static_cast<int>(
        parse_number(root.get<std::string>("size.height"), "size/height"));
  } catch (const pt::ptree_error&) {
    throw InvalidInput("missing size/width or size/height");
  }
  if (image.size.width <= 0 || image.size.height <= 0) {
    throw InvalidInput("non-positive image size");
  }
  const std::string source = file.filename().string();
  for (const auto& [tag, node] : root) {
    if (tag != "object") continue;
    InstanceAnnotation ann;
    ann.image_id = image.image_id;
    try {
      ann.class_name = canonical_class_name(node.get<std::string>("name"));
      ann.bbox = read_bndbox(node);
    } catch (const pt::ptree_error& e) {
      throw InvalidInput(std::string("incomplete object: ") + e.what());
    }
    if (ann.class_name.empty()) throw InvalidInput("object with empty name");
    if (sanitize_box(ann.bbox, image.size, source, warnings)) {
      image.objects.push_back(std::move(ann));
    }
  }
  return image;
}

[[noreturn]] void schema_fail(const std::string& pointer,
                              const std::string& what) {
  throw SchemaError(pointer, what);
}

const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                              const std::string& pointer) {
  if (!obj.is_object()) schema_fail(pointer, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(pointer + "/" + key, "missing field");
  return *it;
}

long long require_int(const nlohmann::json& obj, const std::string& key,
                      const std::string& pointer) {
  const auto& v = require(obj, key, pointer);
  if (!v.is_number_integer()) schema_fail(pointer + "/" + key, "expected an integer");
  return v.get<long long>();
}

ImageRecord parse_labels_doc(const nlohmann::json& doc, const fs::path& file,
                             std::vector<std::string>& table_names,
                             std::vector<Diagnostic>& warnings) {
  const auto& schema = require(doc, "schema", "");
  if (!schema.is_string() || schema.get<std::string>() != kLabelsSchema) {
    schema_fail("/schema", "expected \"" + std::string(kLabelsSchema) + "\"");
  }
  ImageRecord image;
  image.image_id = file.filename().string();
  if (auto suffix = image.image_id.rfind(".labels.json");
      suffix != std::string::npos) {
    image.image_id.resize(suffix);
  }
  if (auto it = doc.find("bundle_id"); it != doc.end()) {
    if (!it->is_string()) schema_fail("/bundle_id", "expected a string");
    image.image_id = it->get<std::string>();
  }
  const auto& size = require(doc, "image_size", "");
  const long long w = require_int(size, "width", "/image_size");
  const long long h = require_int(size, "height", "/image_size");
  if (w <= 0) schema_fail("/image_size/width", "must be positive");
  if (h <= 0) schema_fail("/image_size/height", "must be positive");
  image.size = {static_cast<int>(w), static_cast<int>(h)};

  const auto& table = require(doc, "class_table", "");
  if (!table.is_array() || table.empty()) {
    schema_fail("/class_table", "expected a non-empty array of names");
  }
  if (table.size() > kMaxClasses) schema_fail("/class_table", "more than 255 classes");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string ptr = "/class_table/" + std::to_string(i);
    if (!table[i].is_string()) schema_fail(ptr, "expected a string");
    auto name = canonical_class_name(table[i].get<std::string>());
    if (name.empty()) schema_fail(ptr, "empty class name");
    names.push_back(name);
    table_names.push_back(std::move(name));
  }
  const std::size_t class_count = names.size();

  const auto& objects = require(doc, "objects", "");
  if (!objects.is_array()) schema_fail("/objects", "expected an array");
  const std::string source = file.filename().string();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string ptr = "/objects/" + std::to_string(i);
    const auto& o = objects[i];
    const auto& name_v = require(o, "class_name", ptr);
    if (!name_v.is_string()) schema_fail(ptr + "/class_name", "expected a string");
    const auto name = canonical_class_name(name_v.get<std::string>());
    if (name.empty()) schema_fail(ptr + "/class_name", "empty class name");
    const long long id = require_int(o, "class_id", ptr);
    if (id == 0) schema_fail(ptr + "/class_id", "0 is reserved for background");
    if (id < 0 || static_cast<std::size_t>(id) > class_count) {
      schema_fail(ptr + "/class_id", "outside 1.." + std::to_string(class_count));
    }
    if (names[static_cast<std::size_t>(id - 1)] != name) {
      schema_fail(ptr + "/class_name", "does not match class_table entry " +
                                           std::to_string(id));
    }
    const long long gray = require_int(o, "gray_value", ptr);
    if (gray != gray_value(static_cast<ClassId>(id), class_count)) {
      schema_fail(ptr + "/gray_value", "inconsistent with class_id");
    }
    const auto& bb = require(o, "bbox_px", ptr);
    if (!bb.is_array() || bb.size() != 4) {
      schema_fail(ptr + "/bbox_px", "expected [x_min, y_min, x_max, y_max]");
    }
    double c[4];
    for (std::size_t k = 0; k < 4; ++k) {
      if (!bb[k].is_number()) {
        schema_fail(ptr + "/bbox_px/" + std::to_string(k), "expected a number");
      }
      c[k] = bb[k].get<double>();
    }
    InstanceAnnotation ann{image.image_id, name, {c[0], c[1], c[2], c[3]}};
    if (sanitize_box(ann.bbox, image.size, source, warnings)) {
      image.objects.push_back(std::move(ann));
    }
  }
  return image;
}

}  // namespace

std::size_t DatasetSummary::annotation_count() const noexcept {
  std::size_t n = 0;
  for (const auto& img : images) n += img.objects.size();
  return n;
}

std::string canonical_class_name(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

ClassTable ClassTable::from_names(const std::vector<std::string>& names) {
  std::set<std::string> unique;
  for (const auto& n : names) {
    auto canon = canonical_class_name(n);
    if (canon.empty()) throw InvalidInput("empty class name");
    if (canon.find(',') != std::string::npos) {
      throw InvalidInput("class name contains a comma: " + canon);
    }
    if (std::isdigit(static_cast<unsigned char>(canon.front()))) {
      throw InvalidInput("class name starts with a digit: " + canon);
    }
    unique.insert(std::move(canon));
  }
  if (unique.size() > kMaxClasses) {
    throw InvalidInput("more than 255 classes cannot be encoded");
  }
  ClassTable t;
  t.names_.assign(unique.begin(), unique.end());
  return t;
}

std::optional<ClassId> ClassTable::id_of(std::string_view canonical_name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), canonical_name);
  if (it == names_.end() || *it != canonical_name) return std::nullopt;
  return static_cast<ClassId>(it - names_.begin() + 1);
}

const std::string& ClassTable::name_of(ClassId id) const {
  if (id == 0 || id > names_.size()) {
    throw InvalidInput("class id " + std::to_string(id) + " outside 1.." +
                       std::to_string(names_.size()));
  }
  return names_[id - 1];
}

DatasetSummary finalize_dataset(std::vector<ImageRecord> images,
                                std::vector<std::string> extra_class_names) {
  DatasetSummary ds;
  std::vector<std::string> names = std::move(extra_class_names);
  for (auto& img : images) {
    for (auto& ann : img.objects) {
      ann.class_name = canonical_class_name(ann.class_name);
      ann.image_id = img.image_id;
      names.push_back(ann.class_name);
    }
  }
  ds.class_table = ClassTable::from_names(names);
  std::sort(images.begin(), images.end(),
            [](const ImageRecord& a, const ImageRecord& b) {
              return a.image_id < b.image_id;
            });
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (images[i].image_id == images[i - 1].image_id) {
      throw InvalidInput("duplicate image id " + images[i].image_id);
    }
  }
  ds.images = std::move(images);
  return ds;
}

DatasetSummary load_voc_xml(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<ImageRecord> images;
  std::vector<Diagnostic> warnings, errors;
  for (const auto& file : files) {
    try {
      images.push_back(parse_voc_file(file, warnings));
    } catch (const Error& e) {
      errors.push_back({file.filename().string(), e.what()});
    }
  }
  if (images.empty()) {
    throw InvalidInput("no annotations found in " + dir.string());
  }
  auto ds = finalize_dataset(std::move(images));
  if (ds.class_table.empty()) {
    throw InvalidInput("no annotations found in " + dir.string());
  }
  ds.warnings = std::move(warnings);
  ds.errors = std::move(errors);
  return ds;
}

DatasetSummary load_json_labels(const fs::path& path) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.size() > 12 &&
          name.ends_with(".labels.json")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw InvalidInput("no annotations found in " + path.string());
    }
  } else {
    files.push_back(path);
  }

  std::vector<ImageRecord> images;
  std::vector<std::string> names;
  std::vector<Diagnostic> warnings;
  for (const auto& file : files) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("", file.string() + ": invalid JSON: " + e.what());
    }
    try {
      images.push_back(parse_labels_doc(doc, file, names, warnings));
    } catch (const SchemaError& e) {
      throw SchemaError(e.pointer(),
                        e.detail() + " (in " + file.filename().string() + ")");
    }
  }
  auto ds = finalize_dataset(std::move(images), std::move(names));
  ds.warnings = std::move(warnings);
  return ds;
}

}  // namespace isimforge
