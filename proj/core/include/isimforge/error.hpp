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

#include <stdexcept>
#include <string>

namespace isimforge {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (files, graphs, configs).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A JSON document that does not match its schema. `pointer` is the
// JSON pointer of the offending field.
class SchemaError : public InvalidInput {
 public:
  SchemaError(std::string pointer, std::string detail)
      : InvalidInput((pointer.empty() ? "/" : pointer) + ": " + detail),
        pointer_(std::move(pointer)),
        detail_(std::move(detail)) {}

  const std::string& pointer() const noexcept { return pointer_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string pointer_;
  std::string detail_;
};

// Filesystem or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace isimforge
