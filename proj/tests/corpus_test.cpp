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

#include "threatscope/corpus.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"
#include "test_util.hpp"

using namespace threatscope;
using corpus::Tweet;
using tstest::make_tweet;

namespace {

std::unordered_set<std::string> set_of(std::initializer_list<std::string> items) {
  return std::unordered_set<std::string>(items);
}

std::unordered_set<std::string> unigrams(const Tweet& tweet) {
  std::unordered_set<std::string> out;
  for (auto& t : corpus::tokenize(tweet.text)) out.insert(std::move(t));
  return out;
}

// Exhaustive re-check of the greedy same-date rule: every dropped tweet has
// an earlier retained same-date tweet at or above the threshold, and no
// retained tweet does.
void check_jaccard_dedup_oracle(const std::vector<Tweet>& input,
                                const std::vector<Tweet>& output,
                                double threshold) {
  std::set<std::string> kept;
  for (const Tweet& t : output) kept.insert(t.id);
  std::vector<const Tweet*> scan;
  for (const Tweet& t : input) scan.push_back(&t);
  std::stable_sort(scan.begin(), scan.end(), [](const Tweet* a, const Tweet* b) {
    return a->posted_at < b->posted_at;
  });
  std::vector<const Tweet*> retained;
  for (const Tweet* t : scan) {
    bool duplicate = false;
    for (const Tweet* r : retained) {
      if (utc_date(r->posted_at) == utc_date(t->posted_at) &&
          corpus::jaccard(unigrams(*r), unigrams(*t)) >= threshold) {
        duplicate = true;
        break;
      }
    }
    CHECK(kept.contains(t->id) == !duplicate);
    if (!duplicate) retained.push_back(t);
  }
}

}  // namespace

TEST_CASE("tokenize lowercases, splits punctuation, keeps tags and urls") {
  CHECK(corpus::tokenize("Patch NOW!") ==
        std::vector<std::string>{"patch", "now", "!"});
  CHECK(corpus::tokenize("#ddos, attack") ==
        std::vector<std::string>{"#ddos", ",", "attack"});
  CHECK(corpus::tokenize("RT @x: hi") ==
        std::vector<std::string>{"rt", "@x", ":", "hi"});
  CHECK(corpus::tokenize("see https://t.co/Ab1 now") ==
        std::vector<std::string>{"see", "https://t.co/ab0", "now"});
  CHECK(corpus::tokenize("(flaw)") ==
        std::vector<std::string>{"(", "flaw", ")"});
}

TEST_CASE("tokenize maps every digit to zero") {
  CHECK(corpus::tokenize("35 million users at risk")[0] == "00");
  CHECK(corpus::tokenize("CVE-2016-5195") ==
        std::vector<std::string>{"cve-0000-0000"});
  for (const auto& token : corpus::tokenize("v2.5.19 beta 7 #y2k")) {
    CHECK_FALSE(contains_nonzero_digit(token));
  }
}

TEST_CASE("normalize collapses the selected entity to the target sentinel") {
  Tweet tweet = make_tweet("t", "2018-01-05T10:00:00Z", "Adobe flaw");
  tweet.entities.push_back({0, 5, "Adobe"});
  const corpus::Instance inst = corpus::normalize(tweet, 0);
  CHECK(inst.tokens ==
        std::vector<std::string>{corpus::kTargetToken, "flaw"});
  CHECK(inst.target_entity == "Adobe");
  CHECK(std::count(inst.tokens.begin(), inst.tokens.end(),
                   corpus::kTargetToken) == 1);
}

TEST_CASE("normalize keeps other entities as plain text") {
  Tweet tweet = make_tweet("t", "2018-01-05T10:00:00Z", "Adobe and Google");
  tweet.entities.push_back({0, 5, "Adobe"});
  tweet.entities.push_back({10, 16, "Google"});
  CHECK(corpus::normalize(tweet, 1).tokens ==
        std::vector<std::string>{"adobe", "and", corpus::kTargetToken});
}

TEST_CASE("normalize of empty entity-free text gives empty tokens") {
  const Tweet tweet = make_tweet("t", "2018-01-05T10:00:00Z", "");
  CHECK(corpus::normalize(tweet, std::nullopt).tokens.empty());
}

TEST_CASE("normalize rejects an out-of-range entity index") {
  const Tweet tweet = make_tweet("t", "2018-01-05T10:00:00Z", "no entities");
  CHECK_THROWS_AS(corpus::normalize(tweet, 0), ValidationError);
}

TEST_CASE("jaccard basics") {
  CHECK(corpus::jaccard(set_of({"a", "b"}), set_of({"a", "b"})) == 1.0);
  CHECK(corpus::jaccard(set_of({"a"}), set_of({"b"})) == 0.0);
  CHECK(corpus::jaccard(set_of({"a", "b", "c"}), set_of({"b", "c", "d"})) ==
        doctest::Approx(0.5));
  CHECK(corpus::jaccard({}, {}) == 1.0);
}

TEST_CASE("jaccard is symmetric and bounded") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::unordered_set<std::string> a;
    std::unordered_set<std::string> b;
    for (int i = 0; i < 12; ++i) {
      if (uniform_index(rng, 2)) a.insert("w" + std::to_string(uniform_index(rng, 8)));
      if (uniform_index(rng, 2)) b.insert("w" + std::to_string(uniform_index(rng, 8)));
    }
    const double ab = corpus::jaccard(a, b);
    CHECK(ab == corpus::jaccard(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (!a.empty()) CHECK(corpus::jaccard(a, a) == 1.0);
  }
}

TEST_CASE("same-date duplicates are dropped, cross-date kept") {
  const std::vector<Tweet> tweets = {
      make_tweet("a", "2018-03-01T08:00:00Z", "serious flaw in router firmware"),
      make_tweet("b", "2018-03-01T09:00:00Z", "serious flaw in router firmware"),
      make_tweet("c", "2018-03-02T08:00:00Z", "serious flaw in router firmware"),
  };
  const auto kept = corpus::dedup_by_jaccard(tweets, 0.7);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "a");
  CHECK(kept[1].id == "c");
}

TEST_CASE("three mutually similar same-date tweets keep only the earliest") {
  const std::vector<Tweet> tweets = {
      make_tweet("late", "2018-03-01T12:00:00Z",
                 "critical bug hits many android phones today"),
      make_tweet("early", "2018-03-01T08:00:00Z",
                 "critical bug hits many android phones now"),
      make_tweet("mid", "2018-03-01T10:00:00Z",
                 "critical bug hits many android phones"),
      make_tweet("other", "2018-03-01T09:00:00Z", "unrelated post about lunch"),
  };
  const auto kept = corpus::dedup_by_jaccard(tweets, 0.7);
  std::set<std::string> ids;
  for (const Tweet& t : kept) ids.insert(t.id);
  CHECK(ids == std::set<std::string>{"early", "other"});
  check_jaccard_dedup_oracle(tweets, kept, 0.7);
}

TEST_CASE("jaccard dedup matches the exhaustive oracle on random corpora") {
  Rng rng(11);
  const std::vector<std::string> words = {"patch",  "flaw", "server", "attack",
                                          "botnet", "ddos", "now",    "linux"};
  std::vector<Tweet> tweets;
  for (int i = 0; i < 60; ++i) {
    std::string text;
    const std::size_t len = 3 + uniform_index(rng, 5);
    for (std::size_t w = 0; w < len; ++w) {
      if (w) text += ' ';
      text += words[uniform_index(rng, words.size())];
    }
    const std::string day = uniform_index(rng, 2) ? "01" : "02";
    const std::string hour = std::to_string(10 + uniform_index(rng, 10));
    tweets.push_back(make_tweet("t" + std::to_string(i),
                                "2018-03-" + day + "T" + hour + ":00:00Z", text));
  }
  check_jaccard_dedup_oracle(tweets, corpus::dedup_by_jaccard(tweets, 0.7), 0.7);
}

TEST_CASE("dedup is idempotent") {
  std::vector<Tweet> tweets;
  for (int i = 0; i < 20; ++i) {
    tweets.push_back(make_tweet(
        "t" + std::to_string(i), "2018-03-01T10:00:00Z",
        i % 3 ? "serious flaw in router firmware" : "totally different news"));
    tweets.back().posted_at += i * 60;
  }
  const auto once = corpus::dedup_by_jaccard(tweets, 0.7);
  const auto twice = corpus::dedup_by_jaccard(once, 0.7);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].id == twice[i].id);

  const auto lcs_once = corpus::dedup_by_lcs(tweets, 0.5);
  const auto lcs_twice = corpus::dedup_by_lcs(lcs_once, 0.5);
  REQUIRE(lcs_once.size() == lcs_twice.size());
  for (std::size_t i = 0; i < lcs_once.size(); ++i) {
    CHECK(lcs_once[i].id == lcs_twice[i].id);
  }
}

TEST_CASE("lcs length on token lists") {
  CHECK(corpus::lcs_length({"a", "b", "c"}, {"a", "x", "c"}) == 2);
  CHECK(corpus::lcs_length({"a"}, {"b"}) == 0);
  CHECK(corpus::lcs_length({}, {"a"}) == 0);
}

TEST_CASE("a retweet is dropped by lcs dedup") {
  // Original: 10 comparison tokens. Retweet adds [rt, @x, :], so the ratio
  // is 10/13 = 0.769 > 0.5. Hashtags and URLs are excluded from comparison.
  const Tweet original =
      make_tweet("orig", "2018-03-01T08:00:00Z",
                 "millions of linux pcs at risk from serious kernel flaw");
  const Tweet retweet =
      make_tweet("rt", "2018-03-01T09:00:00Z",
                 "RT @x: millions of linux pcs at risk from serious kernel flaw "
                 "#linux https://t.co/abc");
  const auto kept = corpus::dedup_by_lcs({original, retweet}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "orig");
}

TEST_CASE("lcs dedup keeps unrelated tweets and drops exact duplicates") {
  const Tweet a = make_tweet("a", "2018-03-01T08:00:00Z", "alpha beta gamma");
  const Tweet b = make_tweet("b", "2018-03-01T09:00:00Z", "delta epsilon zeta");
  const Tweet c = make_tweet("c", "2018-03-02T10:00:00Z", "alpha beta gamma");
  const auto kept = corpus::dedup_by_lcs({a, b, c}, 0.5);
  std::set<std::string> ids;
  for (const Tweet& t : kept) ids.insert(t.id);
  // No same-date restriction here: c duplicates a across dates.
  CHECK(ids == std::set<std::string>{"a", "b"});
}

TEST_CASE("split produces the configured sizes") {
  std::vector<corpus::Instance> instances(6000);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    instances[i].tweet_id = std::to_string(i);
  }
  const auto splits = corpus::split(instances, {42, 4000, 1000, 1000});
  CHECK(splits.train.size() == 4000);
  CHECK(splits.dev.size() == 1000);
  CHECK(splits.test.size() == 1000);

  instances.resize(1966);
  const auto severity = corpus::split(instances, {42, 1200, 300, 466});
  CHECK(severity.train.size() == 1200);
  CHECK(severity.dev.size() == 300);
  CHECK(severity.test.size() == 466);
}

TEST_CASE("fractional split specs cover the corpus") {
  const auto spec = corpus::SplitSpec::from_fractions(5, 1001, 1.0 / 6, 1.0 / 6);
  CHECK(spec.train + spec.dev + spec.test == 1001);
  CHECK(spec.dev == 166);
  CHECK(spec.test == 166);
  CHECK_THROWS_AS(corpus::SplitSpec::from_fractions(5, 100, 0.7, 0.7),
                  ConfigError);
}

TEST_CASE("split is a disjoint cover and deterministic under the seed") {
  std::vector<corpus::Instance> instances(100);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    instances[i].tweet_id = std::to_string(i);
  }
  const auto a = corpus::split(instances, {7, 60, 20, 20});
  const auto b = corpus::split(instances, {7, 60, 20, 20});
  std::set<std::string> seen;
  for (const auto* part : {&a.train, &a.dev, &a.test}) {
    for (const auto& inst : *part) CHECK(seen.insert(inst.tweet_id).second);
  }
  CHECK(seen.size() == 100);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].tweet_id == b.train[i].tweet_id);
  }
  CHECK_THROWS_AS(corpus::split(instances, {7, 90, 20, 20}), ConfigError);
}

TEST_CASE("tweet jsonl round-trips and validates") {
  tstest::TempDir dir("corpus");
  Tweet tweet = make_tweet("t1", "2016-10-21T14:03:00Z",
                           "patch CVE-2016-5195 now", "alice");
  tweet.urls = {"http://example.com/a"};
  tweet.entities.push_back({6, 19, "CVE-2016-5195"});
  corpus::write_tweets_jsonl(dir.file("tweets.jsonl"), {tweet});
  const auto loaded = corpus::read_tweets_jsonl(dir.file("tweets.jsonl"));
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == "t1");
  CHECK(loaded[0].posted_at == tweet.posted_at);
  CHECK(loaded[0].urls == tweet.urls);
  CHECK(loaded[0].entities[0].surface == "CVE-2016-5195");

  write_file(dir.file("bad.jsonl"),
             R"({"id":"x","created_at":"not a date","text":"hi"})"
             "\n");
  CHECK_THROWS_AS(corpus::read_tweets_jsonl(dir.file("bad.jsonl")), ParseError);

  write_file(dir.file("dup.jsonl"),
             R"({"id":"x","created_at":"2018-01-01T00:00:00Z","text":"hi"})"
             "\n"
             R"({"id":"x","created_at":"2018-01-01T00:00:00Z","text":"ho"})"
             "\n");
  CHECK_THROWS_AS(corpus::read_tweets_jsonl(dir.file("dup.jsonl")), ParseError);

  write_file(dir.file("spans.jsonl"),
             R"({"id":"x","created_at":"2018-01-01T00:00:00Z","text":"abcdef",)"
             R"("entities":[{"start":0,"end":4},{"start":2,"end":6}]})"
             "\n");
  CHECK_THROWS_AS(corpus::read_tweets_jsonl(dir.file("spans.jsonl")), ParseError);
}
