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

#include <json.hpp>

#include "isimforge/layout.hpp"

namespace isimforge {

inline constexpr std::string_view kManifestName = "manifest.json";
inline constexpr int kManifestFormatVersion = 1;

// One exported condition bundle: {id}.isim.png, {id}.sodi.txt and
// {id}.labels.json inside `dir`.
struct Bundle {
  std::string id;
  std::filesystem::path dir;
  Layout layout;

  std::string isim_file() const { return id + ".isim.png"; }
  std::string sodi_file() const { return id + ".sodi.txt"; }
  std::string labels_file() const { return id + ".labels.json"; }
  std::filesystem::path isim_path() const { return dir / isim_file(); }
  std::filesystem::path sodi_path() const { return dir / sodi_file(); }
  std::filesystem::path labels_path() const { return dir / labels_file(); }
};

// Zero-padded batch index plus eight hex digits derived from the seed.
std::string make_bundle_id(std::size_t index, std::uint64_t seed);

nlohmann::json labels_json(const Layout& layout, const std::string& bundle_id);
// Rebuilds the layout recorded in a labels manifest. Throws SchemaError.
Layout layout_from_labels(const nlohmann::json& doc);

enum class ExistingPolicy {
  kFail,       // an existing bundle id is an error
  kOverwrite,  // rewrite its files
  kResume,     // keep the files already on disk
};

struct ManifestHeader {
  std::string scdkg_digest;
  ImageSize image_size;
  nlohmann::json config = nlohmann::json::object();
};

// Writes the three bundle files. Safe to call concurrently for distinct ids;
// does not touch manifest.json.
Bundle write_bundle_files(const Layout& layout, const std::filesystem::path& out_dir,
                          std::size_t index, ExistingPolicy policy = ExistingPolicy::kFail);

// Merges `bundles` into out_dir/manifest.json keyed by id, so each bundle is
// listed exactly once. Single writer only.
void update_manifest(const std::filesystem::path& out_dir,
                     const ManifestHeader& header,
                     const std::vector<Bundle>& bundles);

// write_bundle_files followed by a manifest update.
Bundle export_bundle(const Layout& layout, const std::filesystem::path& out_dir,
                     std::size_t index, ExistingPolicy policy = ExistingPolicy::kFail);

// Bundle i gets batch index `first_index + i`. Files are written on `jobs`
// threads; the manifest is written once at the end.
std::vector<Bundle> export_batch(const std::vector<Layout>& layouts,
                                 const std::filesystem::path& out_dir,
                                 const ManifestHeader& header,
                                 ExistingPolicy policy = ExistingPolicy::kFail,
                                 std::size_t jobs = 1, std::size_t first_index = 0);

struct VerifyReport {
  std::string bundle_id;
  double acc_c = 0.0;
  double acc_n = 0.0;
  bool sodi_consistent = false;
  std::vector<std::string> violations;
  // Partial occlusions and merges that stayed above the floor.
  std::vector<std::string> notes;

  bool passed() const noexcept { return violations.empty(); }
};

// Share of a box's pixels an object's gray must hold to count as present.
inline constexpr double kDominanceThreshold = 0.5;

// Checks one bundle: decodes the ISIM, scores class accuracy (box dominated
// by its gray) and count accuracy (decoded regions vs listed objects, per
// class), and compares the SODI text with the listed counts. Unreadable
// files and scores below `floor` are reported as violations, never thrown.
VerifyReport verify_bundle(const std::filesystem::path& dir, const std::string& id,
                           double floor = 0.5);
inline VerifyReport verify_bundle(const Bundle& b, double floor = 0.5) {
  return verify_bundle(b.dir, b.id, floor);
}

// Bundle ids listed by the directory's manifest, or every *.labels.json
// stem when no manifest exists.
std::vector<std::string> list_bundles(const std::filesystem::path& dir);

}  // namespace isimforge
