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

// Small text helpers shared by every file format in the project.

#ifndef MTAFFECT_TEXTIO_H_
#define MTAFFECT_TEXTIO_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtaffect {

// 17 significant digits; parse_double(format_double(x)) == x for finite x.
std::string format_double(double value);

// Strict decimal parse of the whole field. No surrounding whitespace.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

// Splits on ',' with no quoting. A trailing '\r' is dropped first.
std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: truncate then write. Throws
// Error("io") on failure.
void write_text_file(const std::filesystem::path& path,
                     std::string_view contents);

}  // namespace mtaffect

#endif  // MTAFFECT_TEXTIO_H_
