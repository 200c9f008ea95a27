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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "isimforge/dataset.hpp"
#include "isimforge/density.hpp"

namespace isimforge {

inline constexpr int kScdkgFormatVersion = 1;

// Per-class geometry: aspect = w / h, scale = sqrt(w * h) / image width,
// location = box center normalized by the image size.
struct ClassGeometry {
  Density1D aspect_ratio;
  Density1D scale;
  Density2D location;

  friend bool operator==(const ClassGeometry&, const ClassGeometry&) = default;
};

struct FitConfig {
  std::size_t aspect_bins = 64;
  std::size_t scale_bins = 64;
  std::size_t location_bins_x = 32;
  std::size_t location_bins_y = 32;
  // Classes with fewer annotations use the pooled geometry.
  std::size_t min_samples = 20;
  // Mass for empty histogram bins.
  double smoothing = kDefaultSmoothing;
  // Laplace pseudo-count added to every co-occurrence cell.
  double cooccurrence_prior = 1.0;

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

// Row-major square matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * n_ + c];
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * n_, n_};
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// The fitted knowledge graph. Index conventions: geometry[m - 1] and
// row/column m - 1 of p_id belong to class m.
struct Scdkg {
  ClassTable class_table;
  Categorical p_ic;
  Density1D p_in;
  std::vector<ClassGeometry> geometry;
  ClassGeometry geometry_all;
  SquareMatrix p_id;
  FitConfig fit_config;
  std::string source_digest;

  std::size_t class_count() const noexcept { return class_table.size(); }
  const ClassGeometry& geometry_of(ClassId m) const { return geometry.at(m - 1); }

  // Next-class distribution after class m.
  Categorical transition_from(ClassId m) const;

  // Throws InvalidInput on any broken invariant (stochastic rows, coverage,
  // supports).
  void validate() const;

  friend bool operator==(const Scdkg&, const Scdkg&) = default;
};

// Image-level co-occurrence counts: cell (A, B) counts images holding at
// least one A and one B; the diagonal needs two instances of A.
SquareMatrix cooccurrence_counts(
    std::size_t class_count,
    const std::vector<std::vector<ClassId>>& classes_per_image);

// Adds `prior` to every cell and normalizes each row.
SquareMatrix row_normalize(const SquareMatrix& counts, double prior);

// Unit-width bins centred on the integers min..max of `counts`.
Density1D fit_count_density(std::span<const double> counts, double smoothing);

Scdkg fit_scdkg(const DatasetSummary& ds, const FitConfig& cfg = {});

// Canonical JSON document (sorted keys, 17 significant digits) carrying a
// SHA-256 checksum of its own body.
nlohmann::json scdkg_to_json(const Scdkg& g);
Scdkg scdkg_from_json(const nlohmann::json& doc);

// Checksum recorded in the saved file; used as the graph's digest in
// layouts and bundles.
std::string scdkg_digest(const Scdkg& g);

void save_scdkg(const Scdkg& g, const std::filesystem::path& path);
Scdkg load_scdkg(const std::filesystem::path& path);

}  // namespace isimforge
