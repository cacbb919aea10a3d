// Copyright 2026 The mtaffect Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTAFFECT_ERROR_H_
#define MTAFFECT_ERROR_H_

#include <stdexcept>
#include <string>

namespace mtaffect {

// Base class for every error thrown by the library. The category is a short
// lowercase tag ("dataset", "shape", "range", ...) that the CLI prints as a
// greppable prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

// Malformed or inconsistent dataset files.
class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& message)
      : Error("dataset", message) {}
};

// Dimension or length mismatch between arguments.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("shape", message) {}
};

// A value outside its documented domain.
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& message) : Error("range", message) {}
};

// Checkpoint / profile / report file that cannot be read back.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error("format", message) {}
};

}  // namespace mtaffect

#endif  // MTAFFECT_ERROR_H_
