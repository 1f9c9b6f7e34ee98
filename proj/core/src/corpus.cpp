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

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"
#include "threatscope/time_util.hpp"

namespace threatscope::corpus {

namespace {

using nlohmann::json;

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool is_url_token(std::string_view chunk) {
  return chunk.starts_with("http://") || chunk.starts_with("https://") ||
         chunk.starts_with("www.");
}

bool is_marker_token(std::string_view chunk) {
  return chunk.size() > 1 && (chunk[0] == '#' || chunk[0] == '@') &&
         std::isalnum(static_cast<unsigned char>(chunk[1]));
}

// Splits one whitespace-delimited chunk into tokens: leading and trailing
// punctuation become single-character tokens, #tags and @mentions keep
// their marker, URLs pass through whole.
void emit_chunk(std::string_view chunk, std::vector<std::string>& out) {
  if (chunk.empty()) return;
  if (is_url_token(chunk)) {
    out.emplace_back(chunk);
    return;
  }
  std::size_t begin = 0;
  if (!is_marker_token(chunk)) {
    while (begin < chunk.size() && is_ascii_punct(chunk[begin])) {
      out.emplace_back(1, chunk[begin]);
      ++begin;
    }
  }
  std::size_t end = chunk.size();
  while (end > begin && is_ascii_punct(chunk[end - 1])) --end;
  if (end > begin) out.emplace_back(chunk.substr(begin, end - begin));
  for (std::size_t i = end; i < chunk.size(); ++i) {
    out.emplace_back(1, chunk[i]);
  }
}

std::unordered_set<std::string> unigram_set(const std::string& text) {
  std::unordered_set<std::string> set;
  for (auto& token : tokenize(text)) set.insert(std::move(token));
  return set;
}

// Token view used by LCS dedup: hashtags and URLs removed (digits are
// already 0 after tokenize).
std::vector<std::string> lcs_tokens(const std::string& text) {
  std::vector<std::string> tokens = tokenize(text);
  std::erase_if(tokens, [](const std::string& t) {
    return t[0] == '#' || is_url_token(t);
  });
  return tokens;
}

// Scan order for greedy dedup: posted_at ascending, input order on ties.
std::vector<std::size_t> scan_order(const std::vector<Tweet>& tweets) {
  std::vector<std::size_t> order(tweets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return tweets[a].posted_at < tweets[b].posted_at;
                   });
  return order;
}

std::vector<Tweet> keep_in_input_order(const std::vector<Tweet>& tweets,
                                       const std::vector<bool>& keep) {
  std::vector<Tweet> out;
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    if (keep[i]) out.push_back(tweets[i]);
  }
  return out;
}

void validate_tweet(const Tweet& tweet,
                    std::unordered_set<std::string>& seen_ids,
                    const std::string& where) {
  if (tweet.id.empty()) throw ParseError(where + ": empty tweet id");
  if (!seen_ids.insert(tweet.id).second) {
    throw ParseError(where + ": duplicate tweet id '" + tweet.id + "'");
  }
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (const EntitySpan& e : tweet.entities) {
    if (e.byte_start >= e.byte_end || e.byte_end > tweet.text.size()) {
      throw ParseError(where + ": entity span out of bounds in '" + tweet.id + "'");
    }
    spans.emplace_back(e.byte_start, e.byte_end);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second) {
      throw ParseError(where + ": overlapping entity spans in '" + tweet.id + "'");
    }
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  const std::string lowered = map_digits_to_zero(ascii_lower(text));
  std::vector<std::string> tokens;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= lowered.size(); ++i) {
    if (i == lowered.size() || std::isspace(static_cast<unsigned char>(lowered[i]))) {
      emit_chunk(std::string_view(lowered).substr(start, i - start), tokens);
      start = i + 1;
    }
  }
  return tokens;
}

Instance normalize(const Tweet& tweet, std::optional<std::size_t> entity_index) {
  Instance instance;
  instance.tweet_id = tweet.id;
  if (!entity_index) {
    instance.tokens = tokenize(tweet.text);
    return instance;
  }
  if (*entity_index >= tweet.entities.size()) {
    throw ValidationError("entity index " + std::to_string(*entity_index) +
                          " out of range for tweet '" + tweet.id + "'");
  }
  const EntitySpan& span = tweet.entities[*entity_index];
  instance.target_entity = span.surface;
  instance.tokens = tokenize(std::string_view(tweet.text).substr(0, span.byte_start));
  instance.tokens.emplace_back(kTargetToken);
  std::vector<std::string> tail =
      tokenize(std::string_view(tweet.text).substr(span.byte_end));
  instance.tokens.insert(instance.tokens.end(),
                         std::make_move_iterator(tail.begin()),
                         std::make_move_iterator(tail.end()));
  return instance;
}

double jaccard(const std::unordered_set<std::string>& a,
               const std::unordered_set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  const auto& smaller = a.size() <= b.size() ? a : b;
  const auto& larger = a.size() <= b.size() ? b : a;
  std::size_t common = 0;
  for (const std::string& t : smaller) {
    if (larger.contains(t)) ++common;
  }
  return static_cast<double>(common) /
         static_cast<double>(a.size() + b.size() - common);
}

std::vector<Tweet> dedup_by_jaccard(const std::vector<Tweet>& tweets,
                                    double threshold) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw ValidationError("jaccard threshold must be in (0,1]");
  }
  std::vector<std::unordered_set<std::string>> sets(tweets.size());
  std::vector<bool> keep(tweets.size(), false);
  // Retained unigram sets per UTC calendar date.
  std::map<std::int64_t, std::vector<std::size_t>> retained_by_date;
  for (std::size_t i : scan_order(tweets)) {
    sets[i] = unigram_set(tweets[i].text);
    const std::int64_t date = days_from_civil(utc_date(tweets[i].posted_at));
    auto& retained = retained_by_date[date];
    bool duplicate = false;
    for (std::size_t j : retained) {
      if (jaccard(sets[i], sets[j]) >= threshold) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      retained.push_back(i);
      keep[i] = true;
    }
  }
  return keep_in_input_order(tweets, keep);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

std::vector<Tweet> dedup_by_lcs(const std::vector<Tweet>& tweets, double ratio) {
  if (ratio <= 0.0 || ratio > 1.0) {
    throw ValidationError("lcs ratio must be in (0,1]");
  }
  std::vector<std::vector<std::string>> tokens(tweets.size());
  std::vector<bool> keep(tweets.size(), false);
  std::vector<std::size_t> retained;
  for (std::size_t i : scan_order(tweets)) {
    tokens[i] = lcs_tokens(tweets[i].text);
    bool duplicate = false;
    for (std::size_t j : retained) {
      const std::size_t longer = std::max(tokens[i].size(), tokens[j].size());
      // Two empty token lists are exact duplicates.
      if (longer == 0) {
        duplicate = true;
        break;
      }
      const std::size_t lcs = lcs_length(tokens[i], tokens[j]);
      if (static_cast<double>(lcs) / static_cast<double>(longer) > ratio) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      retained.push_back(i);
      keep[i] = true;
    }
  }
  return keep_in_input_order(tweets, keep);
}

SplitSpec SplitSpec::from_fractions(std::uint64_t seed, std::size_t corpus_size,
                                    double dev_fraction, double test_fraction) {
  if (dev_fraction < 0.0 || test_fraction < 0.0 ||
      dev_fraction + test_fraction > 1.0) {
    throw ConfigError("split fractions must be non-negative and sum to <= 1");
  }
  SplitSpec spec;
  spec.seed = seed;
  spec.dev = static_cast<std::size_t>(dev_fraction * static_cast<double>(corpus_size));
  spec.test = static_cast<std::size_t>(test_fraction * static_cast<double>(corpus_size));
  spec.train = corpus_size - spec.dev - spec.test;
  return spec;
}

Splits split(const std::vector<Instance>& corpus, const SplitSpec& spec) {
  const std::size_t total = spec.train + spec.dev + spec.test;
  if (total != corpus.size()) {
    throw ConfigError("split counts (" + std::to_string(total) +
                      ") do not cover corpus of size " +
                      std::to_string(corpus.size()));
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  shuffle(order, rng);
  Splits out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Instance& inst = corpus[order[k]];
    if (k < spec.train) {
      out.train.push_back(inst);
    } else if (k < spec.train + spec.dev) {
      out.dev.push_back(inst);
    } else {
      out.test.push_back(inst);
    }
  }
  return out;
}

std::vector<Tweet> read_tweets_jsonl(const std::filesystem::path& path) {
  std::vector<Tweet> tweets;
  std::unordered_set<std::string> seen_ids;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(n + 1);
    json j;
    try {
      j = json::parse(lines[n]);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    try {
      Tweet tweet;
      tweet.id = j.at("id").get<std::string>();
      tweet.posted_at = parse_rfc3339(j.at("created_at").get<std::string>());
      tweet.author = j.value("user", "");
      tweet.text = j.at("text").get<std::string>();
      for (const auto& url : j.value("urls", json::array())) {
        tweet.urls.push_back(url.get<std::string>());
      }
      for (const auto& e : j.value("entities", json::array())) {
        EntitySpan span;
        span.byte_start = e.at("start").get<std::size_t>();
        span.byte_end = e.at("end").get<std::size_t>();
        span.surface = e.value("surface",
                               tweet.text.substr(span.byte_start,
                                                 span.byte_end - span.byte_start));
        tweet.entities.push_back(std::move(span));
      }
      validate_tweet(tweet, seen_ids, where);
      tweets.push_back(std::move(tweet));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return tweets;
}

void write_tweets_jsonl(const std::filesystem::path& path,
                        const std::vector<Tweet>& tweets) {
  std::ostringstream out;
  for (const Tweet& tweet : tweets) {
    json j;
    j["id"] = tweet.id;
    j["created_at"] = format_rfc3339(tweet.posted_at);
    j["user"] = tweet.author;
    j["text"] = tweet.text;
    j["urls"] = tweet.urls;
    json entities = json::array();
    for (const EntitySpan& e : tweet.entities) {
      entities.push_back({{"start", e.byte_start},
                          {"end", e.byte_end},
                          {"surface", e.surface}});
    }
    j["entities"] = entities;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

std::vector<Instance> read_instances_jsonl(const std::filesystem::path& path) {
  std::vector<Instance> instances;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(n + 1);
    try {
      const json j = json::parse(lines[n]);
      Instance inst;
      inst.tweet_id = j.at("id").get<std::string>();
      inst.target_entity = j.value("target_entity", "");
      for (const auto& t : j.at("tokens")) {
        inst.tokens.push_back(t.get<std::string>());
      }
      instances.push_back(std::move(inst));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return instances;
}

void write_instances_jsonl(const std::filesystem::path& path,
                           const std::vector<Instance>& instances) {
  std::ostringstream out;
  for (const Instance& inst : instances) {
    json j;
    j["id"] = inst.tweet_id;
    j["target_entity"] = inst.target_entity;
    j["tokens"] = inst.tokens;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

}  // namespace threatscope::corpus
