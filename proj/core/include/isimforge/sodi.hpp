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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isimforge/dataset.hpp"
#include "isimforge/error.hpp"

namespace isimforge {

struct Layout;

inline constexpr std::string_view kSodiHead = "A remote sensing image with ";

struct ClassCount {
  ClassId class_id = 0;
  std::string class_name;
  std::size_t count = 0;

  friend bool operator==(const ClassCount&, const ClassCount&) = default;
};

struct SodiPrompt {
  std::string text;
  std::vector<ClassCount> counts;
};

class SodiParseError : public InvalidInput {
 public:
  SodiParseError(std::size_t offset, const std::string& what)
      : InvalidInput("SODI parse error at byte " + std::to_string(offset) + ": " +
                     what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// "{count} {name}" with the name pluralized when count != 1.
std::string pluralize(std::string_view name, std::size_t count);

// Descending count, ties by ascending class id; zero counts removed.
std::vector<ClassCount> order_counts(std::vector<ClassCount> counts);

// Per-class object counts of a layout, ordered as above.
std::vector<ClassCount> count_objects(const Layout& layout);

// Prompt for an already ordered, zero-free count list. Throws InvalidInput
// if the list is empty, unordered or holds a zero.
SodiPrompt sodi_from_counts(std::vector<ClassCount> counts);

SodiPrompt generate_sodi(const Layout& layout);

// Exact inverse of sodi_from_counts over the names in `table`.
std::vector<ClassCount> parse_sodi(std::string_view text, const ClassTable& table);

}  // namespace isimforge
