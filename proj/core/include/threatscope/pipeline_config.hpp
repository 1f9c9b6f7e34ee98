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
//
// Flat key-value pipeline configuration with [section] headers, plus the
// run manifest each stage writes. Grammar:
//
//   [section]
//   key = value        # '#' or ';' starts a comment
//
// Keys are addressed as "section.key". Values keep internal whitespace.

#ifndef THREATSCOPE_PIPELINE_CONFIG_HPP_
#define THREATSCOPE_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace threatscope::pipeline {

class PipelineConfig {
 public:
  static PipelineConfig parse_file(const std::filesystem::path& path);
  static PipelineConfig parse_string(std::string_view content,
                                     const std::string& origin = "<string>");

  // CLI flags land here and win over file values.
  void set(const std::string& key, std::string value);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;

  // Typed getters throw ConfigError on unparseable values.
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t seed() const;  // global.seed, default 0

  // Required path lookup: missing key or missing file throws ConfigError.
  std::filesystem::path require_path(const std::string& key) const;
  // Optional comma-separated path list, each must exist.
  std::vector<std::filesystem::path> path_list(const std::string& key) const;
  // Output directory (created on demand); key output.dir, default "out".
  std::filesystem::path output_dir() const;

  // Canonical "key=value" lines, sorted; the basis of the config hash.
  std::string canonical() const;
  std::string sha256() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Run manifest: effective configuration, seed, and input/output digests.
// Written as sorted-key JSON so identical runs produce identical bytes.
class ManifestWriter {
 public:
  ManifestWriter(std::string stage, const PipelineConfig& config);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  // Writes <stage>.manifest.json into dir and returns its path.
  std::filesystem::path write(const std::filesystem::path& dir) const;

 private:
  std::string stage_;
  const PipelineConfig& config_;
  std::map<std::string, std::string> inputs_;   // path -> sha256
  std::map<std::string, std::string> outputs_;  // name -> sha256
};

}  // namespace threatscope::pipeline

#endif  // THREATSCOPE_PIPELINE_CONFIG_HPP_
