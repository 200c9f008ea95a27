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

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace isimforge {

// Schema tag written into every labels manifest.
inline constexpr std::string_view kLabelsSchema = "isim-forge/1";

// Serializes `doc` with keys in byte order and every floating-point number
// printed with 17 significant digits, so parsing the text back reproduces
// each double exactly. indent < 0 yields a single line.
std::string canonical_dump(const nlohmann::json& doc, int indent = -1);

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

// Whole-file helpers; both throw IoError with the path in the message.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace isimforge
