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
// Tweet ingestion, text normalization, near-duplicate removal, and
// deterministic train/dev/test splits.

#ifndef THREATSCOPE_CORPUS_HPP_
#define THREATSCOPE_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace threatscope::corpus {

// Token every collapsed entity span becomes.
inline constexpr const char* kTargetToken = "⟨TARGET⟩";

struct EntitySpan {
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;  // exclusive
  std::string surface;
};

struct Tweet {
  std::string id;
  std::int64_t posted_at = 0;  // Unix seconds, UTC
  std::string author;
  std::string text;
  std::vector<std::string> urls;
  std::vector<EntitySpan> entities;
};

// A normalized classification unit: one tweet with one entity collapsed
// to the target sentinel (or none, for entity-free scoring).
struct Instance {
  std::string tweet_id;
  std::string target_entity;
  std::vector<std::string> tokens;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;

  // Counts from fractions: dev and test round down, train absorbs the
  // remainder. Fractions must be non-negative and sum to at most 1.
  static SplitSpec from_fractions(std::uint64_t seed, std::size_t corpus_size,
                                  double dev_fraction, double test_fraction);
};

struct Splits {
  std::vector<Instance> train;
  std::vector<Instance> dev;
  std::vector<Instance> test;
};

// Lowercases, splits on whitespace, separates leading/trailing punctuation
// into single-character tokens, keeps #tags, @mentions and URLs intact, and
// maps every digit to 0.
std::vector<std::string> tokenize(std::string_view text);

// Tokenizes with the entity at entity_index collapsed to the target
// sentinel. Pass nullopt to normalize without a target (whole-text
// scoring). Throws ValidationError for an out-of-range index.
Instance normalize(const Tweet& tweet, std::optional<std::size_t> entity_index);

// |a ∩ b| / |a ∪ b|. Two empty sets are identical, hence 1.0.
double jaccard(const std::unordered_set<std::string>& a,
               const std::unordered_set<std::string>& b);

// Greedy same-date dedup: scanning in posted_at order within each UTC
// calendar date, drops any tweet whose normalized unigram set has Jaccard
// >= threshold with an earlier retained tweet of that date. Output keeps
// input order.
std::vector<Tweet> dedup_by_jaccard(const std::vector<Tweet>& tweets,
                                    double threshold = 0.7);

// Greedy dedup on token-level longest common subsequence, comparing tokens
// with hashtags and URLs removed and digits mapped to 0. The later tweet of
// a pair is dropped when LCS length / max(len) > ratio.
std::vector<Tweet> dedup_by_lcs(const std::vector<Tweet>& tweets,
                                double ratio = 0.5);

// Token-level LCS length.
std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b);

// Deterministic shuffle + partition. Counts must cover the corpus exactly;
// throws ConfigError otherwise.
Splits split(const std::vector<Instance>& corpus, const SplitSpec& spec);

// JSONL: one object per line with fields id, created_at (RFC 3339), user,
// text, urls, entities [{start,end,surface}]. Instances additionally carry
// target_entity and tokens. Validation failures throw ParseError with line
// context.
std::vector<Tweet> read_tweets_jsonl(const std::filesystem::path& path);
void write_tweets_jsonl(const std::filesystem::path& path,
                        const std::vector<Tweet>& tweets);
std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path);
void write_instances_jsonl(const std::filesystem::path& path,
                           const std::vector<Instance>& instances);

}  // namespace threatscope::corpus

#endif  // THREATSCOPE_CORPUS_HPP_
