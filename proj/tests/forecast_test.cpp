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

#include <doctest.h>

#include <cmath>

#include "threatscope/error.hpp"
#include "threatscope/text_util.hpp"
#include "test_util.hpp"

using namespace threatscope;
using forecast::Ranking;
using forecast::ScorerKind;
using linker::LinkStage;
using linker::LinkTable;
using tstest::make_tweet;

namespace {

// Scorer with scripted per-tweet probabilities.
class FixedScorer : public forecast::SeverityScorer {
 public:
  explicit FixedScorer(std::map<std::string, double> scores)
      : scores_(std::move(scores)) {}
  double score_tweet(const corpus::Tweet& tweet) const override {
    return scores_.at(tweet.id);
  }

 private:
  std::map<std::string, double> scores_;
};

nvd::CveRecord record(const std::string& id, const std::string& published,
                      std::optional<double> v3) {
  nvd::CveRecord r;
  r.cve_id = id;
  r.published_at = parse_date(published);
  r.cvss_v3 = v3;
  return r;
}

struct Fixture {
  LinkTable table;
  forecast::TweetIndex tweets;
  nvd::RecordStore store;

  void add_link(const std::string& cve, const std::string& tweet_id,
                const std::string& time, double score_unused = 0.0) {
    (void)score_unused;
    table.add(cve, {tweet_id, parse_rfc3339(time), LinkStage::kExplicit});
    tweets.emplace(tweet_id, make_tweet(tweet_id, time, "text of " + tweet_id));
  }
};

}  // namespace

TEST_CASE("forecast_score is the max over linked tweets") {
  Fixture f;
  f.add_link("CVE-2016-5195", "a", "2016-10-21T12:00:00Z");
  f.add_link("CVE-2016-5195", "b", "2016-10-22T12:00:00Z");
  const FixedScorer scorer({{"a", 0.3}, {"b", 0.9}});
  CHECK(forecast::forecast_score("CVE-2016-5195", f.table, scorer, f.tweets) ==
        doctest::Approx(0.9));
  CHECK_THROWS_AS(
      forecast::forecast_score("CVE-2014-0160", f.table, scorer, f.tweets),
      ValidationError);
}

TEST_CASE("forecast_score takes the best entity tuple of a tweet") {
  // One tweet, two entities scoring differently under the LR scorer.
  const std::vector<std::vector<std::string>> corpus_tokens = {
      {"adobe", "bug"}, {"adobe", "bug"}, {"linux", "bug"}, {"linux", "bug"}};
  const auto vocab = featurize::Vocabulary::build_ngram(corpus_tokens, {2});
  linmodel::LinearModel model;
  model.weights.assign(vocab.size(), 0.0);
  // The ⟨TARGET⟩-collapsed bigram of only one entity matches a known
  // feature; give the other a negative weight via the fold-in slot.
  model.weights[*vocab.index_of("adobe bug")] = 2.0;
  model.weights[vocab.unk_index(2)] = -1.0;
  const forecast::LrSeverityScorer scorer(model, vocab);

  corpus::Tweet tweet = make_tweet("t", "2016-10-21T12:00:00Z", "adobe bug");
  tweet.entities.push_back({0, 5, "adobe"});  // collapsing kills the feature
  const double with_entity = scorer.score_tweet(tweet);
  tweet.entities.clear();
  const double whole_text = scorer.score_tweet(tweet);
  CHECK(whole_text == doctest::Approx(linmodel::sigmoid(2.0)));
  CHECK(with_entity < whole_text);

  // Two entities: the max wins. Collapsing "x" keeps "adobe bug" (weight 2)
  // plus one folded bigram (weight -1); collapsing "adobe" leaves two
  // folded bigrams (-2).
  corpus::Tweet two = make_tweet("u", "2016-10-21T12:00:00Z", "adobe bug x");
  two.entities.push_back({0, 5, "adobe"});
  two.entities.push_back({10, 11, "x"});
  CHECK(scorer.score_tweet(two) == doctest::Approx(linmodel::sigmoid(1.0)));
  CHECK(scorer.score_tweet(two) > linmodel::sigmoid(-2.0));
}

TEST_CASE("volume_score counts distinct linked tweets") {
  Fixture f;
  f.add_link("CVE-2016-5195", "a", "2016-10-21T12:00:00Z");
  f.add_link("CVE-2016-5195", "b", "2016-10-22T12:00:00Z");
  f.add_link("CVE-2016-5195", "c", "2016-10-23T12:00:00Z");
  CHECK(forecast::volume_score("CVE-2016-5195", f.table) == 3);
  f.table.add("CVE-2016-5195",
              {"c", parse_rfc3339("2016-10-23T12:00:00Z"), LinkStage::kExplicit});
  CHECK(forecast::volume_score("CVE-2016-5195", f.table) == 3);
  CHECK_THROWS_AS(forecast::volume_score("CVE-1999-0001", f.table),
                  ValidationError);
}

TEST_CASE("rank orders by score with the date/id tie rule") {
  Fixture f;
  f.add_link("CVE-2016-0002", "a", "2016-05-02T12:00:00Z");
  f.add_link("CVE-2016-0001", "b", "2016-05-03T12:00:00Z");
  f.add_link("CVE-2016-0003", "c", "2016-05-01T12:00:00Z");
  const FixedScorer scorer({{"a", 0.5}, {"b", 0.5}, {"c", 0.5}});
  const Ranking ranking =
      forecast::rank(f.table, ScorerKind::kModel, &scorer, &f.tweets, nullptr);
  REQUIRE(ranking.entries.size() == 3);
  // All scores tie; earliest first tweet wins, then id.
  CHECK(ranking.entries[0].cve_id == "CVE-2016-0003");
  CHECK(ranking.entries[1].cve_id == "CVE-2016-0002");
  CHECK(ranking.entries[2].cve_id == "CVE-2016-0001");
  for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
    CHECK(ranking.entries[i - 1].score >= ranking.entries[i].score);
  }
}

TEST_CASE("hand-built five-CVE ranking comes out in expected order") {
  Fixture f;
  f.add_link("CVE-2017-0001", "a", "2017-01-01T12:00:00Z");
  f.add_link("CVE-2017-0002", "b", "2017-01-02T12:00:00Z");
  f.add_link("CVE-2017-0003", "c", "2017-01-03T12:00:00Z");
  f.add_link("CVE-2017-0004", "d", "2017-01-04T12:00:00Z");
  f.add_link("CVE-2017-0005", "e", "2017-01-05T12:00:00Z");
  const FixedScorer scorer(
      {{"a", 0.1}, {"b", 0.9}, {"c", 0.4}, {"d", 0.95}, {"e", 0.4}});
  const Ranking ranking =
      forecast::rank(f.table, ScorerKind::kModel, &scorer, &f.tweets, nullptr);
  std::vector<std::string> order;
  for (const auto& e : ranking.entries) order.push_back(e.cve_id);
  CHECK(order == std::vector<std::string>{"CVE-2017-0004", "CVE-2017-0002",
                                          "CVE-2017-0003", "CVE-2017-0005",
                                          "CVE-2017-0001"});
}

TEST_CASE("rank under a strictly increasing transform is unchanged") {
  Fixture f;
  std::map<std::string, double> scores;
  for (int i = 0; i < 12; ++i) {
    const std::string cve = "CVE-2017-" + std::to_string(1000 + i);
    const std::string id = "t" + std::to_string(i);
    f.add_link(cve, id, "2017-01-0" + std::to_string(1 + i % 9) + "T12:00:00Z");
    scores[id] = 0.05 * i + 0.1;
  }
  auto transformed = scores;
  for (auto& [id, s] : transformed) s = std::tanh(4.0 * s) + 2.0;
  const FixedScorer base(scores);
  const FixedScorer warped(transformed);
  const auto a = forecast::rank(f.table, ScorerKind::kModel, &base, &f.tweets, nullptr);
  const auto b =
      forecast::rank(f.table, ScorerKind::kModel, &warped, &f.tweets, nullptr);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].cve_id == b.entries[i].cve_id);
  }
}

TEST_CASE("true-cvss ranking uses stored scores for reference") {
  Fixture f;
  f.add_link("CVE-2017-0001", "a", "2017-01-01T12:00:00Z");
  f.add_link("CVE-2017-0002", "b", "2017-01-02T12:00:00Z");
  f.store.upsert(record("CVE-2017-0001", "2017-02-01", 5.0));
  f.store.upsert(record("CVE-2017-0002", "2017-02-01", 9.8));
  const auto ranking =
      forecast::rank(f.table, ScorerKind::kTrueCvss, nullptr, nullptr, &f.store);
  CHECK(ranking.entries[0].cve_id == "CVE-2017-0002");
  CHECK(ranking.entries[0].score == 9.8);
}

TEST_CASE("cvss evaluation matches a direct count on a planted fixture") {
  Fixture f;
  std::map<std::string, double> scores;
  std::size_t planted_severe = 0;
  for (int i = 0; i < 200; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", 1000 + i);
    const std::string cve = "CVE-2017-" + std::string(buf);
    const std::string id = "t" + std::to_string(i);
    f.add_link(cve, id, "2017-01-01T12:00:00Z");
    // Planted correlation: the first 100 are severe and mostly score high.
    const bool severe = i < 100;
    planted_severe += severe;
    scores[id] = severe ? 0.6 + 0.004 * i : 0.4 - 0.001 * i;
    f.store.upsert(record(cve, "2017-02-01", severe ? 8.0 : 3.0));
  }
  const FixedScorer scorer(scores);
  const auto ranking =
      forecast::rank(f.table, ScorerKind::kModel, &scorer, &f.tweets, &f.store);
  const auto eval = forecast::evaluate_vs_cvss(ranking, f.store);

  // Direct counting oracle over the ranked prefix.
  for (const std::size_t k : {10u, 50u, 100u}) {
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) {
      tp += nvd::is_severe(*f.store.find(ranking.entries[i].cve_id));
    }
    CHECK(eval.precision_at.at(k) ==
          doctest::Approx(static_cast<double>(tp) / k).epsilon(1e-12));
  }
  CHECK(eval.precision_at.at(10) == 1.0);  // clean separation at the top
  CHECK(eval.pr_auc > 0.9);
}

TEST_CASE("all-severe pools give precision one at every k") {
  Fixture f;
  for (int i = 0; i < 20; ++i) {
    const std::string cve = "CVE-2018-" + std::to_string(1000 + i);
    f.add_link(cve, "t" + std::to_string(i), "2018-01-01T12:00:00Z");
    f.store.upsert(record(cve, "2018-02-01", 9.0));
  }
  const auto ranking =
      forecast::rank(f.table, ScorerKind::kVolume, nullptr, nullptr, &f.store);
  const auto eval = forecast::evaluate_vs_cvss(ranking, f.store);
  CHECK(eval.precision_at.at(10) == 1.0);
  CHECK(eval.pr_auc == 1.0);
}

TEST_CASE("exploit evaluation computes precision and recall at k") {
  Fixture f;
  nvd::ExploitSet exploits;
  std::map<std::string, double> scores;
  for (int i = 0; i < 40; ++i) {
    const std::string cve = "CVE-2018-" + std::to_string(1000 + i);
    const std::string id = "t" + std::to_string(i);
    f.add_link(cve, id, "2018-01-01T12:00:00Z");
    scores[id] = 1.0 - 0.01 * i;
    if (i < 8) exploits.insert(cve);  // the top 8 by score are exploited
  }
  const FixedScorer scorer(scores);
  const auto ranking =
      forecast::rank(f.table, ScorerKind::kModel, &scorer, &f.tweets, nullptr);
  const auto eval = forecast::evaluate_vs_exploits(ranking, exploits);
  CHECK(eval.precision_at.at(10) == doctest::Approx(0.8));
  CHECK(eval.recall_at.at(10) == doctest::Approx(1.0));

  const nvd::ExploitSet empty;
  CHECK_THROWS_AS(forecast::evaluate_vs_exploits(ranking, empty),
                  ValidationError);
}

TEST_CASE("account reliability mirrors the paper's accounting") {
  Fixture f;
  std::unordered_map<std::string, double> scores;
  // jburnsconsult: 15 qualifying forecasts, all severe CVEs.
  // cipherstorm: 5 qualifying, 4 severe - excluded by the > 5 rule until a
  // sixth is added below.
  for (int i = 0; i < 15; ++i) {
    const std::string cve = "CVE-2018-" + std::to_string(1000 + i);
    const std::string id = "jb" + std::to_string(i);
    f.table.add(cve, {id, parse_rfc3339("2018-01-01T12:00:00Z"),
                      LinkStage::kExplicit});
    f.tweets.emplace(id, make_tweet(id, "2018-01-01T12:00:00Z", "warning",
                                    "jburnsconsult"));
    f.store.upsert(record(cve, "2018-02-01", 8.5));
    scores[id] = 0.9;
  }
  for (int i = 0; i < 5; ++i) {
    const std::string cve = "CVE-2018-" + std::to_string(2000 + i);
    const std::string id = "cs" + std::to_string(i);
    f.table.add(cve, {id, parse_rfc3339("2018-01-01T12:00:00Z"),
                      LinkStage::kExplicit});
    f.tweets.emplace(id, make_tweet(id, "2018-01-01T12:00:00Z", "warning",
                                    "cipherstorm"));
    f.store.upsert(record(cve, "2018-02-01", i == 0 ? 4.0 : 9.0));
    scores[id] = 0.8;
  }
  auto stats = forecast::account_reliability(f.table, scores, f.store, f.tweets);
  REQUIRE(stats.size() == 1);  // cipherstorm has only 5 qualifying tweets
  CHECK(stats[0].account == "jburnsconsult");
  CHECK(stats[0].correct == 15);
  CHECK(stats[0].forecasts == 15);
  CHECK(stats[0].accuracy == 1.0);

  // A sixth qualifying tweet pulls cipherstorm in at 5/6 accuracy.
  f.table.add("CVE-2018-2005", {"cs5", parse_rfc3339("2018-01-02T12:00:00Z"),
                                LinkStage::kExplicit});
  f.tweets.emplace("cs5", make_tweet("cs5", "2018-01-02T12:00:00Z", "warning",
                                     "cipherstorm"));
  f.store.upsert(record("CVE-2018-2005", "2018-02-01", 9.0));
  scores["cs5"] = 0.7;
  stats = forecast::account_reliability(f.table, scores, f.store, f.tweets);
  REQUIRE(stats.size() == 2);
  CHECK(stats[1].account == "cipherstorm");
  CHECK(stats[1].correct == 5);
  CHECK(stats[1].forecasts == 6);
  CHECK(stats[1].accuracy == doctest::Approx(5.0 / 6.0));

  // Tweets at or below the score floor never count.
  scores["cs5"] = 0.5;
  stats = forecast::account_reliability(f.table, scores, f.store, f.tweets);
  CHECK(stats.size() == 1);

  // The exploit-based variant scores correctness by the exploit set.
  nvd::ExploitSet exploits = {"CVE-2018-1000", "CVE-2018-1001"};
  stats = forecast::account_reliability(f.table, scores, f.store, f.tweets, 6,
                                        0.5, &exploits);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].correct == 2);
  CHECK(stats[0].forecasts == 15);
}

TEST_CASE("ranking csv round-trips scores and order") {
  Fixture f;
  nvd::ExploitSet exploits;
  f.add_link("CVE-2017-0001", "a", "2017-01-01T12:00:00Z");
  f.add_link("CVE-2017-0002", "b", "2017-01-02T12:00:00Z");
  f.store.upsert(record("CVE-2017-0001", "2017-02-01", 9.0));
  f.store.upsert(record("CVE-2017-0002", "2017-02-01", 3.0));
  exploits.insert("CVE-2017-0001");
  const FixedScorer scorer({{"a", 0.9}, {"b", 0.2}});
  const auto ranking =
      forecast::rank(f.table, ScorerKind::kModel, &scorer, &f.tweets, &f.store);
  tstest::TempDir dir("ranking");
  forecast::save_ranking_csv(dir.file("r.csv"), ranking, f.table, f.store,
                             exploits);
  const auto loaded = forecast::load_ranking_csv(dir.file("r.csv"));
  REQUIRE(loaded.entries.size() == 2);
  CHECK(loaded.entries[0].cve_id == "CVE-2017-0001");
  CHECK(loaded.entries[0].score == doctest::Approx(0.9));
  const auto lines = read_lines(dir.file("r.csv"));
  CHECK(lines[0] ==
        "rank,cve_id,score,cvss_v3,severe,exploited,first_tweet_date,n_tweets");
  CHECK(lines[1].find(",1,") != std::string::npos);  // severe + exploited flags
}
