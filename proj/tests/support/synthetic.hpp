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
#include <string>
#include <vector>

#include "isimforge/dataset.hpp"
#include "isimforge/layout.hpp"
#include "isimforge/random.hpp"
#include "isimforge/scdkg.hpp"

namespace isimforge::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "isimforge");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

// The twenty DIOR object classes, as written in its annotation files.
const std::vector<std::string>& dior_class_names();

// Four classes in two scene types (ship + harbor, airplane + vehicle), each
// class with its own aspect, scale and location range. Images hold 8..24
// objects on an 800 x 800 frame.
DatasetSummary make_structured_dataset(std::size_t images, std::uint64_t seed);

// Writes `images` VOC XML files over the DIOR class names with random boxes.
void write_voc_corpus(const std::filesystem::path& dir, std::size_t images,
                      std::uint64_t seed);

std::string voc_xml(int width, int height,
                    const std::vector<std::pair<std::string, BoxPx>>& objects);

struct PointGeometry {
  double aspect = 1.0;
  double scale = 0.05;
  double cx = 0.5;
  double cy = 0.5;
};

// Graph whose densities are all (near) point masses: p_in at `count`,
// p_ic at `first_class`, geometry per class from `geometry`, and p_id rows
// one-hot on `next[m - 1]`.
Scdkg make_point_mass_graph(const std::vector<std::string>& names,
                            std::size_t count, ClassId first_class,
                            const std::vector<ClassId>& next,
                            const std::vector<PointGeometry>& geometry);

// Random layout whose boxes are pairwise separated by at least one background
// pixel, so no two boxes touch. Classes are drawn uniformly from `names`
// (which must already be canonical and sorted). Sides range over [2, max_side].
Layout random_separated_layout(Rng& rng, const std::vector<std::string>& names,
                               ImageSize size, std::size_t max_objects,
                               int max_side = 120);

// Single-bin density of width 1e-12 starting at `value`.
Density1D point_density(double value);

}  // namespace isimforge::testing
