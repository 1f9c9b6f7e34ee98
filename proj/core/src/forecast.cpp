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

#include "threatscope/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::forecast {

namespace {

// Earliest linked-tweet time, the first-level tie breaker for rankings.
std::int64_t first_tweet_time(const std::vector<linker::LinkedTweet>& tweets) {
  std::int64_t earliest = std::numeric_limits<std::int64_t>::max();
  for (const linker::LinkedTweet& t : tweets) {
    earliest = std::min(earliest, t.posted_at);
  }
  return earliest;
}

const corpus::Tweet& tweet_or_throw(const TweetIndex& tweets,
                                    const std::string& id) {
  const auto it = tweets.find(id);
  if (it == tweets.end()) {
    throw ValidationError("linked tweet '" + id + "' missing from corpus");
  }
  return it->second;
}

double true_cvss_score(const nvd::CveRecord& record) {
  if (record.cvss_v3) return *record.cvss_v3;
  if (record.cvss_v2) return *record.cvss_v2;
  throw ValidationError("record " + record.cve_id + " has no CVSS score");
}

std::vector<metrics::ScoredLabel> cvss_labels(const Ranking& ranking,
                                              const nvd::RecordStore& store) {
  std::vector<metrics::ScoredLabel> items;
  items.reserve(ranking.entries.size());
  for (const RankedCve& entry : ranking.entries) {
    const nvd::CveRecord* record = store.find(entry.cve_id);
    if (!record) {
      throw ValidationError("ranked CVE " + entry.cve_id + " not in NVD store");
    }
    items.push_back({entry.score, nvd::is_severe(*record), entry.cve_id});
  }
  return items;
}

}  // namespace

LrSeverityScorer::LrSeverityScorer(linmodel::LinearModel model,
                                   featurize::Vocabulary vocab)
    : model_(std::move(model)), vocab_(std::move(vocab)) {}

double LrSeverityScorer::score_tweet(const corpus::Tweet& tweet) const {
  double best = -1.0;
  if (tweet.entities.empty()) {
    const corpus::Instance inst = corpus::normalize(tweet, std::nullopt);
    best = linmodel::predict(model_, featurize::vectorize(inst.tokens, vocab_));
  }
  for (std::size_t e = 0; e < tweet.entities.size(); ++e) {
    const corpus::Instance inst = corpus::normalize(tweet, e);
    best = std::max(
        best, linmodel::predict(model_, featurize::vectorize(inst.tokens, vocab_)));
  }
  return best;
}

CnnSeverityScorer::CnnSeverityScorer(convnet::ConvModel model,
                                     featurize::Vocabulary word_vocab)
    : model_(std::move(model)), word_vocab_(std::move(word_vocab)) {}

double CnnSeverityScorer::score_tweet(const corpus::Tweet& tweet) const {
  double best = -1.0;
  if (tweet.entities.empty()) {
    const corpus::Instance inst = corpus::normalize(tweet, std::nullopt);
    best = convnet::forward(model_, featurize::index_sequence(
                                        inst.tokens, word_vocab_, model_.max_len))
               .probability;
  }
  for (std::size_t e = 0; e < tweet.entities.size(); ++e) {
    const corpus::Instance inst = corpus::normalize(tweet, e);
    best = std::max(best, convnet::forward(model_, featurize::index_sequence(
                                                       inst.tokens, word_vocab_,
                                                       model_.max_len))
                              .probability);
  }
  return best;
}

TweetIndex index_tweets(std::span<const corpus::Tweet> tweets) {
  TweetIndex index;
  index.reserve(tweets.size());
  for (const corpus::Tweet& tweet : tweets) index.emplace(tweet.id, tweet);
  return index;
}

double forecast_score(const std::string& cve_id, const linker::LinkTable& table,
                      const SeverityScorer& scorer, const TweetIndex& tweets) {
  const auto it = table.by_cve().find(cve_id);
  if (it == table.by_cve().end() || it->second.empty()) {
    throw ValidationError("no linked tweets for " + cve_id);
  }
  double best = -1.0;
  for (const linker::LinkedTweet& t : it->second) {
    best = std::max(best, scorer.score_tweet(tweet_or_throw(tweets, t.tweet_id)));
  }
  return best;
}

std::size_t volume_score(const std::string& cve_id,
                         const linker::LinkTable& table) {
  const auto it = table.by_cve().find(cve_id);
  if (it == table.by_cve().end()) {
    throw ValidationError("CVE " + cve_id + " not in link table");
  }
  return it->second.size();
}

Ranking rank(const linker::LinkTable& table, ScorerKind kind,
             const SeverityScorer* scorer, const TweetIndex* tweets,
             const nvd::RecordStore* store, std::uint64_t seed) {
  struct Row {
    std::string cve_id;
    double score;
    std::int64_t first_time;
  };
  std::vector<Row> rows;
  Rng rng(seed);
  for (const auto& [cve, linked] : table.by_cve()) {
    Row row;
    row.cve_id = cve;
    row.first_time = first_tweet_time(linked);
    switch (kind) {
      case ScorerKind::kModel:
        if (!scorer || !tweets) {
          throw ValidationError("model ranking needs a scorer and tweet corpus");
        }
        row.score = forecast_score(cve, table, *scorer, *tweets);
        break;
      case ScorerKind::kVolume:
        row.score = static_cast<double>(volume_score(cve, table));
        break;
      case ScorerKind::kTrueCvss: {
        if (!store) throw ValidationError("true-cvss ranking needs an NVD store");
        const nvd::CveRecord* record = store->find(cve);
        if (!record) {
          throw ValidationError("ranked CVE " + cve + " not in NVD store");
        }
        row.score = true_cvss_score(*record);
        break;
      }
      case ScorerKind::kRandom:
        row.score = uniform_real(rng);
        break;
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.first_time != b.first_time) return a.first_time < b.first_time;
    return a.cve_id < b.cve_id;
  });
  Ranking ranking;
  ranking.kind = kind;
  ranking.entries.reserve(rows.size());
  for (Row& row : rows) ranking.entries.push_back({std::move(row.cve_id), row.score});
  return ranking;
}

CvssEvaluation evaluate_vs_cvss(const Ranking& ranking,
                                const nvd::RecordStore& store) {
  const std::vector<metrics::ScoredLabel> items = cvss_labels(ranking, store);
  CvssEvaluation eval;
  for (std::size_t k : {10u, 50u, 100u}) {
    if (k <= items.size()) eval.precision_at[k] = metrics::precision_at_k(items, k);
  }
  eval.pr_auc = metrics::pr_auc(items);
  return eval;
}

ExploitEvaluation evaluate_vs_exploits(const Ranking& ranking,
                                       const nvd::ExploitSet& exploits) {
  std::vector<metrics::ScoredLabel> items;
  items.reserve(ranking.entries.size());
  for (const RankedCve& entry : ranking.entries) {
    items.push_back({entry.score, exploits.contains(entry.cve_id), entry.cve_id});
  }
  ExploitEvaluation eval;
  for (std::size_t k : {10u, 50u, 100u}) {
    if (k <= items.size()) {
      eval.precision_at[k] = metrics::precision_at_k(items, k);
      eval.recall_at[k] = metrics::recall_at_k(items, k);
    }
  }
  return eval;
}

std::vector<AccountStats> account_reliability(
    const linker::LinkTable& table,
    const std::unordered_map<std::string, double>& severity_scores,
    const nvd::RecordStore& store, const TweetIndex& tweets,
    std::size_t min_tweets, double score_floor,
    const nvd::ExploitSet* exploited_as_correct) {
  struct Tally {
    std::size_t correct = 0;
    std::size_t forecasts = 0;
  };
  std::map<std::string, Tally> tallies;
  for (const auto& [cve, linked] : table.by_cve()) {
    const nvd::CveRecord* record = store.find(cve);
    if (!record) {
      throw ValidationError("linked CVE " + cve + " not in NVD store");
    }
    const bool severe = exploited_as_correct
                            ? exploited_as_correct->contains(cve)
                            : nvd::is_severe(*record);
    for (const linker::LinkedTweet& t : linked) {
      const auto score = severity_scores.find(t.tweet_id);
      if (score == severity_scores.end() || score->second <= score_floor) continue;
      const corpus::Tweet& tweet = tweet_or_throw(tweets, t.tweet_id);
      if (tweet.author.empty()) continue;
      Tally& tally = tallies[tweet.author];
      ++tally.forecasts;
      if (severe) ++tally.correct;
    }
  }
  std::vector<AccountStats> out;
  for (const auto& [account, tally] : tallies) {
    if (tally.forecasts < min_tweets) continue;
    AccountStats stats;
    stats.account = account;
    stats.correct = tally.correct;
    stats.forecasts = tally.forecasts;
    stats.accuracy =
        static_cast<double>(tally.correct) / static_cast<double>(tally.forecasts);
    out.push_back(std::move(stats));
  }
  std::sort(out.begin(), out.end(), [](const AccountStats& a, const AccountStats& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.forecasts != b.forecasts) return a.forecasts > b.forecasts;
    return a.account < b.account;
  });
  return out;
}

void save_ranking_csv(const std::filesystem::path& path, const Ranking& ranking,
                      const linker::LinkTable& table,
                      const nvd::RecordStore& store,
                      const nvd::ExploitSet& exploits) {
  std::ostringstream out;
  out << "rank,cve_id,score,cvss_v3,severe,exploited,first_tweet_date,n_tweets\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const RankedCve& entry = ranking.entries[i];
    const nvd::CveRecord* record = store.find(entry.cve_id);
    const auto linked = table.by_cve().find(entry.cve_id);
    std::string cvss = "";
    std::string severe = "";
    if (record) {
      if (record->cvss_v3) cvss = format_double(*record->cvss_v3);
      if (record->cvss_v2 || record->cvss_v3) {
        severe = nvd::is_severe(*record) ? "1" : "0";
      }
    }
    out << (i + 1) << ',' << entry.cve_id << ',' << format_double(entry.score)
        << ',' << cvss << ',' << severe << ','
        << (exploits.contains(entry.cve_id) ? "1" : "0") << ',';
    if (linked != table.by_cve().end() && !linked->second.empty()) {
      out << format_date(utc_date(first_tweet_time(linked->second))) << ','
          << linked->second.size();
    } else {
      out << ",0";
    }
    out << '\n';
  }
  write_file(path, out.str());
}

Ranking load_ranking_csv(const std::filesystem::path& path) {
  Ranking ranking;
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || !lines[0].starts_with("rank,cve_id,score")) {
    throw ParseError(path.string() + ": unexpected ranking header");
  }
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(lines[n]);
    if (fields.size() < 3) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": expected at least 3 fields");
    }
    ranking.entries.push_back(
        {fields[1], std::strtod(fields[2].c_str(), nullptr)});
  }
  return ranking;
}

}  // namespace threatscope::forecast
