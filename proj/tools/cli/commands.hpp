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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isimforge/layout.hpp"
#include "isimforge/scdkg.hpp"

namespace isimforge::cli {

// Process exit status of every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidationFailed = 1,
  kExitUsage = 2,
  kExitIo = 3,
};

// Environment variable consulted when --jobs is not given.
inline constexpr const char* kJobsEnv = "ISIM_FORGE_JOBS";

enum class AnnotationFormat { kAuto, kVoc, kLabels };

struct FitOptions {
  std::filesystem::path annotations;
  std::filesystem::path out;
  AnnotationFormat format = AnnotationFormat::kAuto;
  FitConfig config;
};

struct GenerateOptions {
  std::filesystem::path scdkg;
  std::filesystem::path out_dir;
  std::size_t count = 1;
  std::optional<std::uint64_t> seed;  // drawn at random and logged when absent
  ImageSize image_size;
  SamplerConfig sampler;
  bool overwrite = false;
  bool resume = false;
};

struct ValidateOptions {
  std::filesystem::path bundle_dir;
  double floor = 0.5;
};

struct FidelityOptions {
  std::filesystem::path scdkg;
  std::optional<std::filesystem::path> bundle_dir;
  std::size_t sample = 0;  // layouts to draw when no bundle_dir is given
  std::optional<std::uint64_t> seed;
  ImageSize image_size;
  SamplerConfig sampler;
  std::vector<std::string> disable;  // factors to ablate before sampling
  bool ablation_grid = false;
};

struct InspectOptions {
  std::filesystem::path scdkg;
};

// Settings shared by every subcommand.
struct CommonOptions {
  bool json = false;
  std::size_t jobs = 1;
  std::optional<std::filesystem::path> log_file;
};

// Output streams for one invocation; the run log goes to `err`.
struct Io {
  std::ostream& out;
  std::ostream& err;
};

int cmd_fit(const FitOptions& o, const CommonOptions& common, Io io);
int cmd_generate(const GenerateOptions& o, const CommonOptions& common, Io io);
int cmd_validate(const ValidateOptions& o, const CommonOptions& common, Io io);
int cmd_fidelity(const FidelityOptions& o, const CommonOptions& common, Io io);
int cmd_inspect(const InspectOptions& o, const CommonOptions& common, Io io);

// Parses `args` (without the program name) and dispatches to a subcommand.
// Library errors are reported on `io.err` and mapped onto ExitCode.
int run(const std::vector<std::string>& args, Io io);

// Worker count from $ISIM_FORGE_JOBS, else the hardware concurrency.
std::size_t default_jobs();

}  // namespace isimforge::cli
