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

#include "isimforge/canonical_json.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "isimforge/error.hpp"

namespace isimforge {
namespace {

void write_string(std::string& out, const std::string& s) {
  // Reuse nlohmann's escaping for strings; it is already canonical.
  out += nlohmann::json(s).dump();
}

void write_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw InvalidInput("canonical json: non-finite number");
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  std::string text(buf.data());
  // Keep floats recognizable as floats after a round trip.
  if (text.find_first_of(".eE") == std::string::npos) text += ".0";
  out += text;
}

void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void write(std::string& out, const nlohmann::json& j, int indent, int depth) {
  using value_t = nlohmann::json::value_t;
  switch (j.type()) {
    case value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      // nlohmann::json objects are std::map backed, so iteration is sorted.
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        write_string(out, it.key());
        out += indent < 0 ? ":" : ": ";
        write(out, it.value(), indent, depth + 1);
      }
      newline(out, indent, depth);
      out += '}';
      return;
    }
    case value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line even in indented output.
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && !e.is_structured();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += scalars && indent >= 0 ? ", " : ",";
        first = false;
        if (!scalars) newline(out, indent, depth + 1);
        write(out, e, indent, depth + 1);
      }
      if (!scalars) newline(out, indent, depth);
      out += ']';
      return;
    }
    case value_t::number_float:
      write_double(out, j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& doc, int indent) {
  std::string out;
  write(out, doc, indent, 0);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xf];
  }
  return hex;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace isimforge
