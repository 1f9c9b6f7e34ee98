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
// Crowd-vote aggregation, worker quality filtering, and inter-annotator
// agreement.

#ifndef THREATSCOPE_ANNOTATION_HPP_
#define THREATSCOPE_ANNOTATION_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "threatscope/error.hpp"

namespace threatscope::annotation {

enum class Phase { kExistence, kSeverity };

// Existence: does the tweet report a threat toward the target entity?
// Severity: does the author portray the threat as severe?
enum class Label {
  // existence phase
  kThreatTowardEntity,
  kThreatOtherEntity,
  kNoThreat,
  // severity phase (kNoThreat is shared)
  kSevere,
  kModerate,
};

bool label_valid_for_phase(Label label, Phase phase);
std::string to_string(Phase phase);
std::string to_string(Label label);
Phase parse_phase(std::string_view text);
Label parse_label(std::string_view text, Phase phase);

struct Vote {
  std::string worker_id;
  std::string tweet_id;
  Phase phase = Phase::kExistence;
  Label label = Label::kNoThreat;
};

struct AggregatedLabel {
  std::string tweet_id;
  Phase phase = Phase::kExistence;
  std::size_t positive_votes = 0;
  std::size_t total_votes = 0;
  bool label = false;
};

// Votes expected per tweet under strict aggregation.
std::size_t expected_votes(Phase phase);  // 5 existence, 10 severity

// Majority-threshold aggregation: a tweet has a threat when more than 3 of
// its 5 existence votes say so; a threat is severe when more than 6 of its
// 10 severity votes say so. Under strict mode any tweet with a different
// vote count raises ValidationError. Output is sorted by tweet id.
std::vector<AggregatedLabel> aggregate(std::span<const Vote> votes, Phase phase,
                                       bool strict = true);

// Fraction of the worker's votes that match the majority of the other
// workers on the same (tweet, phase). Ties among the others skip the tweet.
// Throws ValidationError when no vote is evaluable.
double worker_agreement(std::span<const Vote> votes, const std::string& worker_id);

// Drops every vote by workers whose agreement is below min_agreement.
// Single pass: agreement is measured once against the full vote set.
// Workers with no evaluable votes are kept.
std::vector<Vote> filter_workers(std::span<const Vote> votes,
                                 double min_agreement = 0.5);

// Cohen's kappa over two equally long label sequences (any label domain).
// Degenerate chance agreement (p_e = 1) yields 1 when the sequences agree
// everywhere and 0 otherwise.
double cohens_kappa(std::span<const std::string> a, std::span<const std::string> b);

// CSV with header worker_id,tweet_id,phase,label.
std::vector<Vote> read_votes_csv(const std::filesystem::path& path);
void write_votes_csv(const std::filesystem::path& path, std::span<const Vote> votes);

// Aggregated labels as JSON lines.
void write_labels_jsonl(const std::filesystem::path& path,
                        std::span<const AggregatedLabel> labels);
std::vector<AggregatedLabel> read_labels_jsonl(const std::filesystem::path& path);

}  // namespace threatscope::annotation

#endif  // THREATSCOPE_ANNOTATION_HPP_
