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

#include "threatscope/nvd.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "threatscope/error.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::nvd {

namespace {

using nlohmann::json;

void check_score(double score) {
  if (!(score >= 0.0 && score <= 10.0)) {
    throw ValidationError("CVSS score " + std::to_string(score) +
                          " outside [0,10]");
  }
}

std::optional<double> optional_score(const json& j, const char* key,
                                     const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const double score = j.at(key).get<double>();
  if (!(score >= 0.0 && score <= 10.0)) {
    throw ParseError(where + ": " + key + " outside [0,10]");
  }
  return score;
}

}  // namespace

std::string to_string(SeverityCategory category) {
  switch (category) {
    case SeverityCategory::kNone: return "NONE";
    case SeverityCategory::kLow: return "LOW";
    case SeverityCategory::kMedium: return "MEDIUM";
    case SeverityCategory::kHigh: return "HIGH";
    case SeverityCategory::kCritical: return "CRITICAL";
  }
  return "?";
}

bool is_canonical_cve_id(std::string_view id) {
  if (id.size() < 13 || !id.starts_with("CVE-")) return false;
  for (std::size_t i = 4; i < 8; ++i) {
    if (id[i] < '0' || id[i] > '9') return false;
  }
  if (id[8] != '-') return false;
  if (id.size() - 9 < 4) return false;
  for (std::size_t i = 9; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return false;
  }
  return true;
}

SeverityCategory categorize(double score, CvssVersion version) {
  check_score(score);
  if (version == CvssVersion::kV2) {
    if (score < 4.0) return SeverityCategory::kLow;
    if (score < 7.0) return SeverityCategory::kMedium;
    return SeverityCategory::kHigh;
  }
  if (score == 0.0) return SeverityCategory::kNone;
  if (score < 4.0) return SeverityCategory::kLow;
  if (score < 7.0) return SeverityCategory::kMedium;
  if (score < 9.0) return SeverityCategory::kHigh;
  return SeverityCategory::kCritical;
}

bool is_severe(const CveRecord& record) {
  if (record.cvss_v3) {
    check_score(*record.cvss_v3);
    return *record.cvss_v3 >= 7.0;
  }
  if (record.cvss_v2) {
    check_score(*record.cvss_v2);
    return *record.cvss_v2 >= 7.0;
  }
  throw ValidationError("record " + record.cve_id + " has no CVSS score");
}

void RecordStore::upsert(CveRecord record) {
  const auto it = records_.find(record.cve_id);
  if (it == records_.end()) {
    records_.emplace(record.cve_id, std::move(record));
    return;
  }
  if (days_from_civil(record.published_at) >=
      days_from_civil(it->second.published_at)) {
    it->second = std::move(record);
  }
}

const CveRecord* RecordStore::find(const std::string& cve_id) const {
  const auto it = records_.find(cve_id);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<std::string> RecordStore::sorted_ids() const {
  std::vector<std::string> ids;
  ids.reserve(records_.size());
  for (const auto& [id, record] : records_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RecordStore load_nvd(std::span<const std::filesystem::path> files,
                     std::vector<LoadWarning>* warnings) {
  RecordStore store;
  for (const auto& path : files) {
    const std::vector<std::string> lines = read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
      if (trim(lines[n]).empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(n + 1);
      try {
        const json j = json::parse(lines[n]);
        CveRecord record;
        record.cve_id = j.at("cve_id").get<std::string>();
        if (!is_canonical_cve_id(record.cve_id)) {
          throw ParseError(where + ": malformed CVE id '" + record.cve_id + "'");
        }
        record.published_at = parse_date(j.at("published").get<std::string>());
        record.description = j.value("description", "");
        record.cvss_v2 = optional_score(j, "cvss_v2", where);
        record.cvss_v3 = optional_score(j, "cvss_v3", where);
        store.upsert(std::move(record));
      } catch (const std::exception& e) {
        if (warnings) warnings->push_back({where, e.what()});
      }
    }
  }
  return store;
}

void save_nvd(const std::filesystem::path& path, const RecordStore& store) {
  std::ostringstream out;
  for (const std::string& id : store.sorted_ids()) {
    const CveRecord* r = store.find(id);
    json j;
    j["cve_id"] = r->cve_id;
    j["published"] = format_date(r->published_at);
    j["description"] = r->description;
    if (r->cvss_v2) j["cvss_v2"] = *r->cvss_v2;
    if (r->cvss_v3) j["cvss_v3"] = *r->cvss_v3;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

ExploitSet load_exploits(std::span<const std::filesystem::path> files,
                         std::vector<LoadWarning>* warnings) {
  ExploitSet set;
  for (const auto& path : files) {
    const std::vector<std::string> lines = read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
      std::string line(trim(lines[n]));
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = std::string(trim(line.substr(0, hash)));
      if (line.empty()) continue;
      const std::string id = ascii_lower(line).starts_with("cve-")
                                 ? "CVE-" + line.substr(4)
                                 : line;
      if (!is_canonical_cve_id(id)) {
        if (warnings) {
          warnings->push_back({path.string() + ":" + std::to_string(n + 1),
                               "malformed CVE id '" + line + "'"});
        }
        continue;
      }
      set.insert(id);
    }
  }
  return set;
}

}  // namespace threatscope::nvd
