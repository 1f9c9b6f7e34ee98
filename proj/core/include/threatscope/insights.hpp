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
// Corpus analyses: log-odds ranking of severity-indicative lexicon tokens
// and publication delay statistics.

#ifndef THREATSCOPE_INSIGHTS_HPP_
#define THREATSCOPE_INSIGHTS_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "threatscope/linker.hpp"
#include "threatscope/nvd.hpp"

namespace threatscope::insights {

using Lexicon = std::unordered_set<std::string>;
using TokenizedDoc = std::vector<std::string>;

// One lowercase token per line; '#' comments allowed.
Lexicon load_lexicon(const std::filesystem::path& path);

// Smoothed log-odds of the token appearing in severe-class documents
// versus other documents, on document frequencies:
// ln[((a+s)/(A-a+s)) / ((b+s)/(B-b+s))].
double log_odds(const std::string& token,
                std::span<const TokenizedDoc> severe_docs,
                std::span<const TokenizedDoc> other_docs,
                double smoothing = 0.5);

// Lexicon members present in at least one document, by descending
// log-odds, ties lexicographic, truncated to k.
std::vector<std::pair<std::string, double>> rank_adjectives(
    std::span<const TokenizedDoc> severe_docs,
    std::span<const TokenizedDoc> other_docs, const Lexicon& lexicon,
    std::size_t k, double smoothing = 0.5);

struct DelayStats {
  std::vector<std::pair<std::string, std::int64_t>> leads;  // per CVE, days
  double median_days = 0.0;  // lower middle value for even counts
  double within_60_days = 0.0;
};

// Lead = publication date minus earliest linked tweet date per CVE,
// restricted to leads >= min_lead. Throws ValidationError when nothing
// qualifies.
DelayStats delay_stats(const linker::LinkTable& table,
                       const nvd::RecordStore& store, int min_lead = 1);

}  // namespace threatscope::insights

#endif  // THREATSCOPE_INSIGHTS_HPP_
