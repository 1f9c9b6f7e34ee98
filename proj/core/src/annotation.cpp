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

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "threatscope/text_util.hpp"

namespace threatscope::annotation {

namespace {

using nlohmann::json;

bool is_positive(const Vote& vote) {
  return vote.phase == Phase::kExistence
             ? vote.label == Label::kThreatTowardEntity
             : vote.label == Label::kSevere;
}

std::size_t positive_threshold(Phase phase) {
  // Table-driven cutoffs: existence positive when votes > 3, severe when > 6.
  return phase == Phase::kExistence ? 3 : 6;
}

// Strict majority label among votes, or nullopt on a tie.
std::optional<Label> majority_label(const std::vector<Label>& labels) {
  std::map<Label, std::size_t> counts;
  for (Label l : labels) ++counts[l];
  std::size_t best = 0;
  std::optional<Label> winner;
  bool tied = false;
  for (const auto& [label, count] : counts) {
    if (count > best) {
      best = count;
      winner = label;
      tied = false;
    } else if (count == best) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return winner;
}

struct AgreementCount {
  std::size_t matches = 0;
  std::size_t evaluable = 0;
};

// Per-worker leave-one-out agreement counts over the full vote set.
std::unordered_map<std::string, AgreementCount> agreement_counts(
    std::span<const Vote> votes) {
  std::map<std::pair<std::string, Phase>, std::vector<const Vote*>> by_item;
  for (const Vote& v : votes) {
    by_item[{v.tweet_id, v.phase}].push_back(&v);
  }
  std::unordered_map<std::string, AgreementCount> counts;
  for (const auto& [item, item_votes] : by_item) {
    for (const Vote* v : item_votes) {
      std::vector<Label> others;
      for (const Vote* o : item_votes) {
        if (o != v) others.push_back(o->label);
      }
      if (others.empty()) continue;
      const std::optional<Label> majority = majority_label(others);
      if (!majority) continue;
      AgreementCount& c = counts[v->worker_id];
      ++c.evaluable;
      if (*majority == v->label) ++c.matches;
    }
  }
  return counts;
}

}  // namespace

bool label_valid_for_phase(Label label, Phase phase) {
  switch (label) {
    case Label::kThreatTowardEntity:
    case Label::kThreatOtherEntity:
      return phase == Phase::kExistence;
    case Label::kSevere:
    case Label::kModerate:
      return phase == Phase::kSeverity;
    case Label::kNoThreat:
      return true;
  }
  return false;
}

std::string to_string(Phase phase) {
  return phase == Phase::kExistence ? "existence" : "severity";
}

std::string to_string(Label label) {
  switch (label) {
    case Label::kThreatTowardEntity: return "threat_toward_entity";
    case Label::kThreatOtherEntity: return "threat_other_entity";
    case Label::kNoThreat: return "no_threat";
    case Label::kSevere: return "severe";
    case Label::kModerate: return "moderate";
  }
  return "?";
}

Phase parse_phase(std::string_view text) {
  const std::string s = ascii_lower(trim(text));
  if (s == "existence") return Phase::kExistence;
  if (s == "severity") return Phase::kSeverity;
  throw ParseError("unknown phase: '" + std::string(text) + "'");
}

Label parse_label(std::string_view text, Phase phase) {
  const std::string s = ascii_lower(trim(text));
  Label label;
  if (s == "threat_toward_entity") {
    label = Label::kThreatTowardEntity;
  } else if (s == "threat_other_entity") {
    label = Label::kThreatOtherEntity;
  } else if (s == "no_threat") {
    label = Label::kNoThreat;
  } else if (s == "severe") {
    label = Label::kSevere;
  } else if (s == "moderate") {
    label = Label::kModerate;
  } else {
    throw ParseError("unknown label: '" + std::string(text) + "'");
  }
  if (!label_valid_for_phase(label, phase)) {
    throw ParseError("label '" + s + "' not legal for phase " + to_string(phase));
  }
  return label;
}

std::size_t expected_votes(Phase phase) {
  return phase == Phase::kExistence ? 5 : 10;
}

std::vector<AggregatedLabel> aggregate(std::span<const Vote> votes, Phase phase,
                                       bool strict) {
  std::map<std::string, AggregatedLabel> by_tweet;
  std::set<std::pair<std::string, std::string>> seen;
  for (const Vote& v : votes) {
    if (v.phase != phase) continue;
    if (!label_valid_for_phase(v.label, phase)) {
      throw ValidationError("label " + to_string(v.label) +
                            " not legal for phase " + to_string(phase));
    }
    if (!seen.insert({v.worker_id, v.tweet_id}).second) {
      throw ValidationError("duplicate vote by worker '" + v.worker_id +
                            "' on tweet '" + v.tweet_id + "'");
    }
    AggregatedLabel& agg = by_tweet[v.tweet_id];
    agg.tweet_id = v.tweet_id;
    agg.phase = phase;
    ++agg.total_votes;
    if (is_positive(v)) ++agg.positive_votes;
  }
  std::vector<AggregatedLabel> out;
  out.reserve(by_tweet.size());
  for (auto& [id, agg] : by_tweet) {
    if (strict && agg.total_votes != expected_votes(phase)) {
      throw ValidationError("tweet '" + id + "' has " +
                            std::to_string(agg.total_votes) + " votes; " +
                            std::to_string(expected_votes(phase)) +
                            " expected for " + to_string(phase));
    }
    agg.label = agg.positive_votes > positive_threshold(phase);
    out.push_back(std::move(agg));
  }
  return out;
}

double worker_agreement(std::span<const Vote> votes,
                        const std::string& worker_id) {
  const auto counts = agreement_counts(votes);
  const auto it = counts.find(worker_id);
  if (it == counts.end() || it->second.evaluable == 0) {
    throw ValidationError("no evaluable votes for worker '" + worker_id + "'");
  }
  return static_cast<double>(it->second.matches) /
         static_cast<double>(it->second.evaluable);
}

std::vector<Vote> filter_workers(std::span<const Vote> votes,
                                 double min_agreement) {
  if (min_agreement < 0.0 || min_agreement > 1.0) {
    throw ValidationError("min_agreement must be in [0,1]");
  }
  const auto counts = agreement_counts(votes);
  std::vector<Vote> kept;
  kept.reserve(votes.size());
  for (const Vote& v : votes) {
    const auto it = counts.find(v.worker_id);
    const bool evaluable = it != counts.end() && it->second.evaluable > 0;
    if (evaluable) {
      const double rate = static_cast<double>(it->second.matches) /
                          static_cast<double>(it->second.evaluable);
      if (rate < min_agreement) continue;
    }
    kept.push_back(v);
  }
  return kept;
}

double cohens_kappa(std::span<const std::string> a,
                    std::span<const std::string> b) {
  if (a.size() != b.size()) {
    throw ValidationError("kappa inputs differ in length: " +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.empty()) throw ValidationError("kappa inputs are empty");
  const double n = static_cast<double>(a.size());
  std::map<std::string, std::size_t> freq_a;
  std::map<std::string, std::size_t> freq_b;
  std::size_t agreements = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++freq_a[a[i]];
    ++freq_b[b[i]];
    if (a[i] == b[i]) ++agreements;
  }
  const double p_o = static_cast<double>(agreements) / n;
  double p_e = 0.0;
  for (const auto& [label, count] : freq_a) {
    const auto it = freq_b.find(label);
    if (it != freq_b.end()) {
      p_e += (static_cast<double>(count) / n) *
             (static_cast<double>(it->second) / n);
    }
  }
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

std::vector<Vote> read_votes_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty votes file");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header != std::vector<std::string>{"worker_id", "tweet_id", "phase", "label"}) {
    throw ParseError(path.string() + ": unexpected header '" + lines[0] + "'");
  }
  std::vector<Vote> votes;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(lines[n]);
    if (fields.size() != 4) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    Vote v;
    v.worker_id = fields[0];
    v.tweet_id = fields[1];
    try {
      v.phase = parse_phase(fields[2]);
      v.label = parse_label(fields[3], v.phase);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) + ": " + e.what());
    }
    votes.push_back(std::move(v));
  }
  return votes;
}

void write_votes_csv(const std::filesystem::path& path,
                     std::span<const Vote> votes) {
  std::ostringstream out;
  out << "worker_id,tweet_id,phase,label\n";
  for (const Vote& v : votes) {
    out << csv_escape(v.worker_id) << ',' << csv_escape(v.tweet_id) << ','
        << to_string(v.phase) << ',' << to_string(v.label) << '\n';
  }
  write_file(path, out.str());
}

void write_labels_jsonl(const std::filesystem::path& path,
                        std::span<const AggregatedLabel> labels) {
  std::ostringstream out;
  for (const AggregatedLabel& l : labels) {
    json j;
    j["tweet_id"] = l.tweet_id;
    j["phase"] = to_string(l.phase);
    j["positive_votes"] = l.positive_votes;
    j["total_votes"] = l.total_votes;
    j["label"] = l.label;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

std::vector<AggregatedLabel> read_labels_jsonl(const std::filesystem::path& path) {
  std::vector<AggregatedLabel> labels;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    try {
      const json j = json::parse(lines[n]);
      AggregatedLabel l;
      l.tweet_id = j.at("tweet_id").get<std::string>();
      l.phase = parse_phase(j.at("phase").get<std::string>());
      l.positive_votes = j.value("positive_votes", 0u);
      l.total_votes = j.value("total_votes", 0u);
      l.label = j.at("label").get<bool>();
      labels.push_back(std::move(l));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) + ": " + e.what());
    }
  }
  return labels;
}

}  // namespace threatscope::annotation
