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

#include "isimforge/sodi.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "isimforge/layout.hpp"

namespace isimforge {
namespace {

// Irregular plurals. None of the DIOR classes need one.
const std::map<std::string, std::string, std::less<>>& irregular_plurals() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"person", "people"},
      {"child", "children"},
      {"bus", "buses"},
  };
  return table;
}

bool count_order(const ClassCount& a, const ClassCount& b) {
  if (a.count != b.count) return a.count > b.count;
  return a.class_id < b.class_id;
}

}  // namespace

std::string pluralize(std::string_view name, std::size_t count) {
  if (count == 1) return std::string(name);
  const auto& irregular = irregular_plurals();
  if (auto it = irregular.find(name); it != irregular.end()) return it->second;
  if (name.ends_with('s')) return std::string(name);
  return std::string(name) + "s";
}

std::vector<ClassCount> order_counts(std::vector<ClassCount> counts) {
  std::erase_if(counts, [](const ClassCount& c) { return c.count == 0; });
  std::sort(counts.begin(), counts.end(), count_order);
  return counts;
}

std::vector<ClassCount> count_objects(const Layout& layout) {
  std::map<ClassId, ClassCount> by_class;
  for (const auto& obj : layout.objects) {
    auto& c = by_class[obj.class_id];
    c.class_id = obj.class_id;
    c.class_name = obj.class_name;
    ++c.count;
  }
  std::vector<ClassCount> counts;
  for (auto& [id, c] : by_class) counts.push_back(std::move(c));
  return order_counts(std::move(counts));
}

SodiPrompt sodi_from_counts(std::vector<ClassCount> counts) {
  if (counts.empty()) throw InvalidInput("SODI needs at least one object");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].count == 0) throw InvalidInput("SODI count list holds a zero");
    if (i > 0 && !count_order(counts[i - 1], counts[i])) {
      throw InvalidInput("SODI count list is not in canonical order");
    }
  }
  std::string text(kSodiHead);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i > 0) text += ", ";
    text += std::to_string(counts[i].count);
    text += ' ';
    text += pluralize(counts[i].class_name, counts[i].count);
  }
  return {std::move(text), std::move(counts)};
}

SodiPrompt generate_sodi(const Layout& layout) {
  if (layout.objects.empty()) throw InvalidInput("cannot describe an empty layout");
  return sodi_from_counts(count_objects(layout));
}

std::vector<ClassCount> parse_sodi(std::string_view text, const ClassTable& table) {
  if (!text.starts_with(kSodiHead)) {
    std::size_t off = 0;
    while (off < text.size() && off < kSodiHead.size() && text[off] == kSodiHead[off]) ++off;
    throw SodiParseError(off, "expected scene head \"A remote sensing image with \"");
  }
  std::vector<ClassCount> counts;
  std::size_t pos = kSodiHead.size();
  for (;;) {
    const std::size_t item_start = pos;
    std::size_t count = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, count);
    if (ec != std::errc() || ptr == first || *first == '0') {
      throw SodiParseError(pos, "expected a positive count");
    }
    pos += static_cast<std::size_t>(ptr - first);
    if (pos >= text.size() || text[pos] != ' ') {
      throw SodiParseError(pos, "expected a space after the count");
    }
    ++pos;
    const std::size_t end = std::min(text.find(", ", pos), text.size());
    const std::string_view surface = text.substr(pos, end - pos);
    if (surface.empty()) throw SodiParseError(pos, "expected a class name");

    ClassCount found;
    for (std::size_t m = 1; m <= table.size(); ++m) {
      const auto& name = table.names()[m - 1];
      if (pluralize(name, count) == surface) {
        found = {static_cast<ClassId>(m), name, count};
        break;
      }
    }
    if (found.class_id == 0) {
      throw SodiParseError(pos, "unknown class name \"" + std::string(surface) + "\"");
    }
    if (std::any_of(counts.begin(), counts.end(),
                    [&](const ClassCount& c) { return c.class_id == found.class_id; })) {
      throw SodiParseError(item_start, "class listed twice: " + found.class_name);
    }
    if (!counts.empty() && !count_order(counts.back(), found)) {
      throw SodiParseError(item_start, "items are not in canonical order");
    }
    counts.push_back(std::move(found));
    pos = end;
    if (pos == text.size()) break;
    pos += 2;
  }
  return counts;
}

}  // namespace isimforge
