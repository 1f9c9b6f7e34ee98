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

#include "threatscope/pipeline_config.hpp"

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "threatscope/digest.hpp"
#include "threatscope/error.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::pipeline {

namespace {

std::string strip_comment(std::string_view line) {
  bool escaped = false;
  std::string out;
  for (char c : line) {
    if (!escaped && (c == '#' || c == ';')) break;
    escaped = c == '\\' && !escaped;
    out.push_back(c);
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::parse_file(const std::filesystem::path& path) {
  return parse_string(read_file(path), path.string());
}

PipelineConfig PipelineConfig::parse_string(std::string_view content,
                                            const std::string& origin) {
  PipelineConfig config;
  std::string section;
  const std::vector<std::string> lines = split(content, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string line(trim(strip_comment(lines[n])));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(n + 1) +
                          ": malformed section header '" + line + "'");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(n + 1) +
                        ": expected key = value, got '" + line + "'");
    }
    const std::string key(trim(std::string_view(line).substr(0, eq)));
    const std::string value(trim(std::string_view(line).substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(n + 1) + ": empty key");
    }
    config.values_[section.empty() ? key : section + "." + key] = value;
  }
  return config;
}

void PipelineConfig::set(const std::string& key, std::string value) {
  values_[key] = std::move(value);
}

bool PipelineConfig::has(const std::string& key) const {
  return values_.contains(key);
}

std::optional<std::string> PipelineConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string PipelineConfig::get_or(const std::string& key,
                                   std::string fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? std::move(fallback) : it->second;
}

std::int64_t PipelineConfig::get_int(const std::string& key,
                                     std::int64_t fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  char* end = nullptr;
  const std::int64_t parsed = std::strtoll(value->c_str(), &end, 10);
  if (end == value->c_str() || *end != '\0') {
    throw ConfigError("config " + key + ": '" + *value + "' is not an integer");
  }
  return parsed;
}

double PipelineConfig::get_double(const std::string& key, double fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  char* end = nullptr;
  const double parsed = std::strtod(value->c_str(), &end);
  if (end == value->c_str() || *end != '\0') {
    throw ConfigError("config " + key + ": '" + *value + "' is not a number");
  }
  return parsed;
}

bool PipelineConfig::get_bool(const std::string& key, bool fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  const std::string v = ascii_lower(*value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config " + key + ": '" + *value + "' is not a boolean");
}

std::uint64_t PipelineConfig::seed() const {
  return static_cast<std::uint64_t>(get_int("global.seed", 0));
}

std::filesystem::path PipelineConfig::require_path(const std::string& key) const {
  const auto value = get(key);
  if (!value || value->empty()) {
    throw ConfigError("config is missing required path '" + key + "'");
  }
  const std::filesystem::path path(*value);
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config " + key + ": path does not exist: " + *value);
  }
  return path;
}

std::vector<std::filesystem::path> PipelineConfig::path_list(
    const std::string& key) const {
  std::vector<std::filesystem::path> paths;
  const auto value = get(key);
  if (!value || value->empty()) return paths;
  for (const std::string& part : split(*value, ',')) {
    const std::string trimmed(trim(part));
    if (trimmed.empty()) continue;
    if (!std::filesystem::exists(trimmed)) {
      throw ConfigError("config " + key + ": path does not exist: " + trimmed);
    }
    paths.emplace_back(trimmed);
  }
  return paths;
}

std::filesystem::path PipelineConfig::output_dir() const {
  const std::filesystem::path dir(get_or("output.dir", "out"));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string PipelineConfig::canonical() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) {
    out << key << '=' << value << '\n';
  }
  return out.str();
}

std::string PipelineConfig::sha256() const { return sha256_hex(canonical()); }

ManifestWriter::ManifestWriter(std::string stage, const PipelineConfig& config)
    : stage_(std::move(stage)), config_(config) {}

void ManifestWriter::add_input(const std::filesystem::path& path) {
  inputs_[path.string()] = sha256_file_hex(path);
}

void ManifestWriter::add_output(const std::filesystem::path& path) {
  outputs_[path.filename().string()] = sha256_file_hex(path);
}

std::filesystem::path ManifestWriter::write(const std::filesystem::path& dir) const {
  nlohmann::json j;
  j["stage"] = stage_;
  j["seed"] = config_.seed();
  j["config_sha256"] = config_.sha256();
  j["config"] = config_.entries();
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  const std::filesystem::path path = dir / (stage_ + ".manifest.json");
  write_file(path, j.dump(2) + "\n");
  return path;
}

}  // namespace threatscope::pipeline
