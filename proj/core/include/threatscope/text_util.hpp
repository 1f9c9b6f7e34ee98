// Copyright 2026 The Threatscope Authors
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

#ifndef THREATSCOPE_TEXT_UTIL_HPP_
#define THREATSCOPE_TEXT_UTIL_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace threatscope {

// ASCII-only lowercasing; multi-byte UTF-8 sequences pass through.
std::string ascii_lower(std::string_view s);

// Replaces every ASCII digit with '0'.
std::string map_digits_to_zero(std::string_view s);

bool contains_nonzero_digit(std::string_view s);

// Splits on a single delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view s, char delim);

// CSV field parsing with double-quote escaping ("" inside quotes).
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

std::string_view trim(std::string_view s);

// Shortest round-trippable decimal form of a double ("%.17g" cross-checked
// against shorter forms). Used everywhere a double reaches a file so reruns
// are byte-identical.
std::string format_double(double value);

// Whole-file and line-oriented IO. read_lines strips trailing '\r' and
// drops a final empty line. Throws ConfigError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace threatscope

#endif  // THREATSCOPE_TEXT_UTIL_HPP_
