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
// NVD record ingestion, CVSS severity banding, and exploit ground truth.

#ifndef THREATSCOPE_NVD_HPP_
#define THREATSCOPE_NVD_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "threatscope/time_util.hpp"

namespace threatscope::nvd {

enum class CvssVersion { kV2, kV3 };

enum class SeverityCategory { kNone, kLow, kMedium, kHigh, kCritical };

std::string to_string(SeverityCategory category);

struct CveRecord {
  std::string cve_id;  // canonical CVE-YYYY-NNNN+
  CivilDate published_at;
  std::string description;
  std::optional<double> cvss_v2;
  std::optional<double> cvss_v3;
};

// True for the canonical upper-case form CVE-YYYY-NNNN+ (at least four
// final digits).
bool is_canonical_cve_id(std::string_view id);

// Score banding. v2: Low 0.0-3.9, Medium 4.0-6.9, High 7.0-10.0.
// v3: None 0.0, Low 0.1-3.9, Medium 4.0-6.9, High 7.0-8.9,
// Critical 9.0-10.0. Scores outside [0,10] throw ValidationError.
SeverityCategory categorize(double score, CvssVersion version);

// Severe means CVSS >= 7.0 (High or Critical). Uses the v3 score when
// present, otherwise falls back to v2; throws ValidationError when the
// record carries no score at all.
bool is_severe(const CveRecord& record);

struct LoadWarning {
  std::string where;  // file:line
  std::string message;
};

// Id-keyed store; duplicate ids keep the record with the latest
// published_at.
class RecordStore {
 public:
  void upsert(CveRecord record);
  const CveRecord* find(const std::string& cve_id) const;
  std::size_t size() const { return records_.size(); }

  // Ids in lexicographic order, for deterministic serialization.
  std::vector<std::string> sorted_ids() const;

 private:
  std::unordered_map<std::string, CveRecord> records_;
};

using ExploitSet = std::unordered_set<std::string>;

// Newline-delimited JSON with fields cve_id, published, description,
// cvss_v2, cvss_v3. Malformed records are skipped with a warning carrying
// line context; parsing continues.
RecordStore load_nvd(std::span<const std::filesystem::path> files,
                     std::vector<LoadWarning>* warnings = nullptr);
void save_nvd(const std::filesystem::path& path, const RecordStore& store);

// Union of newline-delimited CVE id lists; '#' starts a comment.
ExploitSet load_exploits(std::span<const std::filesystem::path> files,
                         std::vector<LoadWarning>* warnings = nullptr);

}  // namespace threatscope::nvd

#endif  // THREATSCOPE_NVD_HPP_
