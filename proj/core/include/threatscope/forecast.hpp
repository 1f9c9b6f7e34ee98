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
// CVE ranking from per-tweet severity scores and its evaluation against
// CVSS categories and exploit ground truth.

#ifndef THREATSCOPE_FORECAST_HPP_
#define THREATSCOPE_FORECAST_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "threatscope/convnet.hpp"
#include "threatscope/corpus.hpp"
#include "threatscope/linear_model.hpp"
#include "threatscope/linker.hpp"
#include "threatscope/metrics.hpp"
#include "threatscope/nvd.hpp"

namespace threatscope::forecast {

// Severity probability of one tweet: the maximum over its (entity, tweet)
// tuples; a tweet without entities scores once on its whole normalized
// text.
class SeverityScorer {
 public:
  virtual ~SeverityScorer() = default;
  virtual double score_tweet(const corpus::Tweet& tweet) const = 0;
};

class LrSeverityScorer : public SeverityScorer {
 public:
  LrSeverityScorer(linmodel::LinearModel model, featurize::Vocabulary vocab);
  double score_tweet(const corpus::Tweet& tweet) const override;

 private:
  linmodel::LinearModel model_;
  featurize::Vocabulary vocab_;
};

class CnnSeverityScorer : public SeverityScorer {
 public:
  CnnSeverityScorer(convnet::ConvModel model, featurize::Vocabulary word_vocab);
  double score_tweet(const corpus::Tweet& tweet) const override;

 private:
  convnet::ConvModel model_;
  featurize::Vocabulary word_vocab_;
};

enum class ScorerKind { kModel, kVolume, kTrueCvss, kRandom };

struct RankedCve {
  std::string cve_id;
  double score = 0.0;
};

struct Ranking {
  ScorerKind kind = ScorerKind::kModel;
  std::vector<RankedCve> entries;  // scores non-increasing
};

using TweetIndex = std::unordered_map<std::string, corpus::Tweet>;

TweetIndex index_tweets(std::span<const corpus::Tweet> tweets);

// Max severity probability over the CVE's linked tweets. Throws
// ValidationError when the CVE has no linked tweet or a tweet is missing
// from the index.
double forecast_score(const std::string& cve_id, const linker::LinkTable& table,
                      const SeverityScorer& scorer, const TweetIndex& tweets);

// Number of distinct linked tweets.
std::size_t volume_score(const std::string& cve_id,
                         const linker::LinkTable& table);

// Descending score; ties resolved by earliest first-tweet date, then
// cve_id. kTrueCvss ranks by the actual v3 score (v2 fallback) and exists
// for reference only; kRandom draws scores under the seed.
Ranking rank(const linker::LinkTable& table, ScorerKind kind,
             const SeverityScorer* scorer, const TweetIndex* tweets,
             const nvd::RecordStore* store, std::uint64_t seed = 0);

struct CvssEvaluation {
  std::map<std::size_t, double> precision_at;  // k -> P@k, k in {10,50,100}
  double pr_auc = 0.0;
};

// Positives are records with CVSS >= 7.0. Every ranked CVE must be in the
// store. P@k is reported for each k <= pool size.
CvssEvaluation evaluate_vs_cvss(const Ranking& ranking,
                                const nvd::RecordStore& store);

struct ExploitEvaluation {
  std::map<std::size_t, double> precision_at;
  std::map<std::size_t, double> recall_at;
};

// Positives are exploit-set members; recall needs at least one positive in
// the ranking.
ExploitEvaluation evaluate_vs_exploits(const Ranking& ranking,
                                       const nvd::ExploitSet& exploits);

struct AccountStats {
  std::string account;
  std::size_t correct = 0;
  std::size_t forecasts = 0;
  double accuracy = 0.0;
};

// Accounts with more than (min_tweets - 1) linked tweets scoring above
// score_floor; each qualifying (tweet, cve) pair is one forecast, correct
// when the CVE is severe — or, when an exploit set is supplied, when the
// CVE was actually exploited. Sorted by accuracy desc, forecasts desc, name.
std::vector<AccountStats> account_reliability(
    const linker::LinkTable& table,
    const std::unordered_map<std::string, double>& severity_scores,
    const nvd::RecordStore& store, const TweetIndex& tweets,
    std::size_t min_tweets = 6, double score_floor = 0.5,
    const nvd::ExploitSet* exploited_as_correct = nullptr);

// CSV rank,cve_id,score,cvss_v3,severe,exploited,first_tweet_date,n_tweets.
void save_ranking_csv(const std::filesystem::path& path, const Ranking& ranking,
                      const linker::LinkTable& table,
                      const nvd::RecordStore& store,
                      const nvd::ExploitSet& exploits);
Ranking load_ranking_csv(const std::filesystem::path& path);

}  // namespace threatscope::forecast

#endif  // THREATSCOPE_FORECAST_HPP_
