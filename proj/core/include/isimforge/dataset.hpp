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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isimforge {

using ClassId = std::uint32_t;

// Largest class count an 8-bit instance map can encode next to background 0.
inline constexpr std::size_t kMaxClasses = 255;

// Axis-aligned box in the pixel frame (origin top-left). The box covers
// [x_min, x_max) x [y_min, y_max).
struct BoxPx {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const BoxPx&, const BoxPx&) = default;
  friend auto operator<=>(const BoxPx&, const BoxPx&) = default;
};

struct ImageSize {
  int width = 800;
  int height = 800;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct InstanceAnnotation {
  std::string image_id;
  std::string class_name;
  BoxPx bbox;

  friend bool operator==(const InstanceAnnotation&,
                         const InstanceAnnotation&) = default;
};

struct ImageRecord {
  std::string image_id;
  ImageSize size;
  std::vector<InstanceAnnotation> objects;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Bijection between canonical class names and identifiers 1..M. Names are
// kept in byte order, so identifiers never depend on input order. 0 is the
// background and never names a class.
class ClassTable {
 public:
  ClassTable() = default;

  // Normalizes, deduplicates and sorts `names`. Throws InvalidInput on an
  // empty or comma-bearing name, or more than kMaxClasses classes.
  static ClassTable from_names(const std::vector<std::string>& names);

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<ClassId> id_of(std::string_view canonical_name) const;
  // Throws InvalidInput for ids outside 1..M.
  const std::string& name_of(ClassId id) const;

  friend bool operator==(const ClassTable&, const ClassTable&) = default;

 private:
  std::vector<std::string> names_;
};

// Lowercase, trim, collapse internal whitespace runs to a single space.
std::string canonical_class_name(std::string_view raw);

struct Diagnostic {
  std::string source;
  std::string message;
};

struct DatasetSummary {
  std::vector<ImageRecord> images;  // sorted by image_id
  ClassTable class_table;
  std::vector<Diagnostic> warnings;
  std::vector<Diagnostic> errors;  // per-file failures that were skipped

  std::size_t class_count() const noexcept { return class_table.size(); }
  std::size_t annotation_count() const noexcept;
};

// Parses every *.xml file under `dir` (non-recursive). Malformed files are
// recorded in `errors` and skipped; boxes crossing the frame are clamped
// with a warning; boxes left with area < 4 px^2 are dropped. Throws
// InvalidInput when nothing parseable was found.
DatasetSummary load_voc_xml(const std::filesystem::path& dir);

// Reads one labels manifest, or every *.labels.json under a directory.
// Throws SchemaError naming the offending JSON pointer.
DatasetSummary load_json_labels(const std::filesystem::path& path);

// Canonicalizes names, sorts images and builds the class table. Shared by
// both loaders and by tests that assemble datasets in memory.
DatasetSummary finalize_dataset(std::vector<ImageRecord> images,
                                std::vector<std::string> extra_class_names = {});

}  // namespace isimforge
