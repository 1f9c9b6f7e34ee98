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

#include "threatscope/annotation.hpp"

#include <doctest.h>

#include <algorithm>

#include "threatscope/rng.hpp"
#include "test_util.hpp"

using namespace threatscope;
using annotation::Label;
using annotation::Phase;
using annotation::Vote;

namespace {

// n workers voting on one tweet, `positive` of them with the positive label.
std::vector<Vote> votes_for(const std::string& tweet, Phase phase,
                            std::size_t positive, std::size_t total) {
  const Label yes =
      phase == Phase::kExistence ? Label::kThreatTowardEntity : Label::kSevere;
  const Label no =
      phase == Phase::kExistence ? Label::kNoThreat : Label::kModerate;
  std::vector<Vote> votes;
  for (std::size_t w = 0; w < total; ++w) {
    votes.push_back({"w" + std::to_string(w), tweet, phase,
                     w < positive ? yes : no});
  }
  return votes;
}

std::vector<std::string> seq(std::initializer_list<const char*> labels) {
  return std::vector<std::string>(labels.begin(), labels.end());
}

}  // namespace

TEST_CASE("existence aggregation needs more than 3 of 5 votes") {
  const auto four = annotation::aggregate(votes_for("t", Phase::kExistence, 4, 5),
                                          Phase::kExistence);
  REQUIRE(four.size() == 1);
  CHECK(four[0].label);
  CHECK(four[0].positive_votes == 4);
  CHECK(four[0].total_votes == 5);

  const auto three = annotation::aggregate(votes_for("t", Phase::kExistence, 3, 5),
                                           Phase::kExistence);
  CHECK_FALSE(three[0].label);
}

TEST_CASE("severity aggregation needs more than 6 of 10 votes") {
  CHECK_FALSE(annotation::aggregate(votes_for("t", Phase::kSeverity, 6, 10),
                                    Phase::kSeverity)[0]
                  .label);
  CHECK(annotation::aggregate(votes_for("t", Phase::kSeverity, 7, 10),
                              Phase::kSeverity)[0]
            .label);
}

TEST_CASE("aggregate is invariant to vote order") {
  auto votes = votes_for("t", Phase::kSeverity, 7, 10);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    shuffle(votes, rng);
    const auto agg = annotation::aggregate(votes, Phase::kSeverity);
    CHECK(agg[0].label);
    CHECK(agg[0].positive_votes == 7);
  }
}

TEST_CASE("strict aggregation rejects wrong vote counts") {
  CHECK_THROWS_AS(annotation::aggregate(votes_for("t", Phase::kExistence, 2, 4),
                                        Phase::kExistence),
                  ValidationError);
  CHECK_NOTHROW(annotation::aggregate(votes_for("t", Phase::kExistence, 2, 4),
                                      Phase::kExistence, /*strict=*/false));
  // One vote per (worker, tweet, phase).
  std::vector<Vote> dup = {
      {"w0", "t", Phase::kExistence, Label::kNoThreat},
      {"w0", "t", Phase::kExistence, Label::kNoThreat},
  };
  CHECK_THROWS_AS(annotation::aggregate(dup, Phase::kExistence, false),
                  ValidationError);
}

TEST_CASE("worker agreement against the leave-one-out majority") {
  // w0 matches the unanimous others everywhere; w9 opposes them.
  std::vector<Vote> votes;
  for (int t = 0; t < 4; ++t) {
    const std::string tweet = "t" + std::to_string(t);
    for (int w = 0; w < 4; ++w) {
      votes.push_back({"w" + std::to_string(w), tweet, Phase::kExistence,
                       Label::kThreatTowardEntity});
    }
    votes.push_back({"w9", tweet, Phase::kExistence, Label::kNoThreat});
  }
  CHECK(annotation::worker_agreement(votes, "w0") == 1.0);
  CHECK(annotation::worker_agreement(votes, "w9") == 0.0);
  CHECK_THROWS_AS(annotation::worker_agreement(votes, "missing"),
                  ValidationError);
}

TEST_CASE("worker agreement counts only tweets with a defined majority") {
  // Hand-built fixture: w matches on 3 of 4 evaluable tweets; a fifth
  // tweet ties 1-1 among the others and is skipped.
  std::vector<Vote> votes;
  const auto add = [&](const std::string& tweet, const std::string& worker,
                       Label label) {
    votes.push_back({worker, tweet, Phase::kExistence, label});
  };
  for (const char* tweet : {"t1", "t2", "t3"}) {
    add(tweet, "w", Label::kThreatTowardEntity);
    add(tweet, "a", Label::kThreatTowardEntity);
    add(tweet, "b", Label::kThreatTowardEntity);
  }
  add("t4", "w", Label::kNoThreat);
  add("t4", "a", Label::kThreatTowardEntity);
  add("t4", "b", Label::kThreatTowardEntity);
  add("t5", "w", Label::kNoThreat);
  add("t5", "a", Label::kThreatTowardEntity);
  add("t5", "b", Label::kNoThreat);
  CHECK(annotation::worker_agreement(votes, "w") == doctest::Approx(0.75));
}

TEST_CASE("filter_workers drops only low-agreement workers") {
  // Five consistent workers and one adversary voting the opposite.
  std::vector<Vote> votes;
  for (int t = 0; t < 6; ++t) {
    const std::string tweet = "t" + std::to_string(t);
    for (int w = 0; w < 5; ++w) {
      votes.push_back({"w" + std::to_string(w), tweet, Phase::kSeverity,
                       t % 2 ? Label::kSevere : Label::kModerate});
    }
    votes.push_back({"adversary", tweet, Phase::kSeverity,
                     t % 2 ? Label::kModerate : Label::kSevere});
  }
  const auto kept = annotation::filter_workers(votes, 0.5);
  CHECK(kept.size() == 30);
  CHECK(std::none_of(kept.begin(), kept.end(), [](const Vote& v) {
    return v.worker_id == "adversary";
  }));

  // min_agreement 0 keeps everything.
  CHECK(annotation::filter_workers(votes, 0.0).size() == votes.size());
}

TEST_CASE("filter_workers keeps perfect workers") {
  std::vector<Vote> votes;
  for (int t = 0; t < 3; ++t) {
    for (int w = 0; w < 3; ++w) {
      votes.push_back({"w" + std::to_string(w), "t" + std::to_string(t),
                       Phase::kExistence, Label::kThreatTowardEntity});
    }
  }
  CHECK(annotation::filter_workers(votes, 0.5).size() == votes.size());
}

TEST_CASE("cohens kappa on hand-computed fixtures") {
  CHECK(annotation::cohens_kappa(seq({"+", "+", "-", "-"}),
                                 seq({"+", "+", "-", "-"})) == 1.0);
  // p_o = 0.5, p_e = 0.5.
  CHECK(annotation::cohens_kappa(seq({"+", "+", "-", "-"}),
                                 seq({"+", "-", "+", "-"})) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // p_o = 0.75, p_e = 0.5.
  CHECK(annotation::cohens_kappa(seq({"+", "+", "+", "-"}),
                                 seq({"+", "+", "-", "-"})) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cohens kappa is symmetric and handles degenerate marginals") {
  const auto a = seq({"x", "y", "x", "z", "y", "x"});
  const auto b = seq({"x", "x", "y", "z", "y", "z"});
  CHECK(annotation::cohens_kappa(a, b) ==
        doctest::Approx(annotation::cohens_kappa(b, a)).epsilon(1e-15));
  // Single shared label: p_e = 1.
  CHECK(annotation::cohens_kappa(seq({"x", "x"}), seq({"x", "x"})) == 1.0);
  CHECK_THROWS_AS(annotation::cohens_kappa(seq({"x"}), seq({"x", "y"})),
                  ValidationError);
}

TEST_CASE("votes csv round-trip") {
  tstest::TempDir dir("votes");
  const std::vector<Vote> votes = {
      {"w1", "t1", Phase::kExistence, Label::kThreatTowardEntity},
      {"w2", "t1", Phase::kExistence, Label::kThreatOtherEntity},
      {"w1", "t2", Phase::kSeverity, Label::kSevere},
  };
  annotation::write_votes_csv(dir.file("votes.csv"), votes);
  const auto loaded = annotation::read_votes_csv(dir.file("votes.csv"));
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[1].label == Label::kThreatOtherEntity);
  CHECK(loaded[2].phase == Phase::kSeverity);

  write_file(dir.file("bad.csv"), "worker_id,tweet_id,phase,label\nw,t,existence,severe\n");
  CHECK_THROWS_AS(annotation::read_votes_csv(dir.file("bad.csv")), ParseError);
}

TEST_CASE("aggregated labels jsonl round-trip") {
  tstest::TempDir dir("labels");
  const auto labels = annotation::aggregate(
      votes_for("t", Phase::kSeverity, 7, 10), Phase::kSeverity);
  annotation::write_labels_jsonl(dir.file("labels.jsonl"), labels);
  const auto loaded = annotation::read_labels_jsonl(dir.file("labels.jsonl"));
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].label);
  CHECK(loaded[0].phase == Phase::kSeverity);
  CHECK(loaded[0].positive_votes == 7);
}
