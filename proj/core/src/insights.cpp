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

#include "threatscope/insights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "threatscope/error.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::insights {

namespace {

// Number of documents containing the token at least once.
std::size_t document_frequency(const std::string& token,
                               std::span<const TokenizedDoc> docs) {
  std::size_t count = 0;
  for (const TokenizedDoc& doc : docs) {
    if (std::find(doc.begin(), doc.end(), token) != doc.end()) ++count;
  }
  return count;
}

}  // namespace

Lexicon load_lexicon(const std::filesystem::path& path) {
  Lexicon lexicon;
  for (const std::string& raw : read_lines(path)) {
    std::string line(trim(raw));
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = std::string(trim(line.substr(0, hash)));
    if (line.empty()) continue;
    lexicon.insert(ascii_lower(line));
  }
  return lexicon;
}

double log_odds(const std::string& token,
                std::span<const TokenizedDoc> severe_docs,
                std::span<const TokenizedDoc> other_docs, double smoothing) {
  if (severe_docs.empty() || other_docs.empty()) {
    throw ValidationError("log-odds needs non-empty document sets");
  }
  const double a = static_cast<double>(document_frequency(token, severe_docs));
  const double b = static_cast<double>(document_frequency(token, other_docs));
  const double total_a = static_cast<double>(severe_docs.size());
  const double total_b = static_cast<double>(other_docs.size());
  const double odds_severe = (a + smoothing) / (total_a - a + smoothing);
  const double odds_other = (b + smoothing) / (total_b - b + smoothing);
  return std::log(odds_severe / odds_other);
}

std::vector<std::pair<std::string, double>> rank_adjectives(
    std::span<const TokenizedDoc> severe_docs,
    std::span<const TokenizedDoc> other_docs, const Lexicon& lexicon,
    std::size_t k, double smoothing) {
  std::vector<std::pair<std::string, double>> ranked;
  for (const std::string& token : lexicon) {
    const std::size_t df_severe = document_frequency(token, severe_docs);
    const std::size_t df_other = document_frequency(token, other_docs);
    if (df_severe == 0 && df_other == 0) continue;
    ranked.emplace_back(token,
                        log_odds(token, severe_docs, other_docs, smoothing));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

DelayStats delay_stats(const linker::LinkTable& table,
                       const nvd::RecordStore& store, int min_lead) {
  DelayStats stats;
  for (const auto& [cve, tweets] : table.by_cve()) {
    const nvd::CveRecord* record = store.find(cve);
    if (!record || tweets.empty()) continue;
    std::int64_t earliest = std::numeric_limits<std::int64_t>::max();
    for (const linker::LinkedTweet& t : tweets) {
      earliest = std::min(earliest, t.posted_at);
    }
    const std::int64_t lead = days_from_civil(record->published_at) -
                              days_from_civil(utc_date(earliest));
    if (lead < min_lead) continue;
    stats.leads.emplace_back(cve, lead);
  }
  if (stats.leads.empty()) {
    throw ValidationError("no CVEs qualify for delay statistics");
  }
  std::vector<std::int64_t> days;
  days.reserve(stats.leads.size());
  std::size_t within = 0;
  for (const auto& [cve, lead] : stats.leads) {
    days.push_back(lead);
    if (lead <= 60) ++within;
  }
  std::sort(days.begin(), days.end());
  // Lower of the two central values for even counts.
  stats.median_days = static_cast<double>(days[(days.size() - 1) / 2]);
  stats.within_60_days =
      static_cast<double>(within) / static_cast<double>(days.size());
  return stats;
}

}  // namespace threatscope::insights
