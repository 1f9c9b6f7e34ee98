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

#include "threatscope/featurize.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "threatscope/error.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::featurize {

namespace {

// Infers from a reserved token name which n-gram order it folds; used when
// reloading a serialized vocabulary.
std::optional<int> parse_unk_order(const std::string& token) {
  const std::string prefix = "⟨UNK_";
  if (!token.starts_with(prefix) || !token.ends_with("⟩")) return std::nullopt;
  const std::string digits =
      token.substr(prefix.size(), token.size() - prefix.size() - 3);
  if (digits.empty()) return std::nullopt;
  int order = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    order = order * 10 + (c - '0');
  }
  return order;
}

int ngram_order(const std::string& ngram) {
  return 1 + static_cast<int>(std::count(ngram.begin(), ngram.end(), ' '));
}

}  // namespace

std::string unk_token(int order) {
  return "⟨UNK_" + std::to_string(order) + "⟩";
}

std::uint64_t SparseVector::total_count() const {
  std::uint64_t total = 0;
  for (const auto& [index, count] : entries) total += count;
  return total;
}

std::vector<std::string> extract_ngrams(std::span<const std::string> tokens,
                                        const std::set<int>& orders) {
  std::vector<std::string> out;
  for (int order : orders) {
    if (order < 1) throw ValidationError("n-gram order must be >= 1");
    if (tokens.size() < static_cast<std::size_t>(order)) continue;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (int k = 1; k < order; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

void Vocabulary::finalize() {
  index_.clear();
  unk_.clear();
  pad_.reset();
  for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
    if (tokens_[i] == kPadToken) pad_ = i;
    if (tokens_[i] == kUnkToken) unk_[1] = i;
    if (const auto order = parse_unk_order(tokens_[i])) unk_[*order] = i;
  }
}

Vocabulary Vocabulary::build_ngram(
    std::span<const std::vector<std::string>> corpus, const std::set<int>& orders,
    std::size_t min_frequency) {
  if (corpus.empty()) throw ValidationError("cannot build vocabulary from empty corpus");
  if (orders.empty()) throw ValidationError("no n-gram orders given");
  std::map<std::string, std::size_t> freq;
  for (const auto& tokens : corpus) {
    for (auto& gram : extract_ngrams(tokens, orders)) ++freq[gram];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [gram, count] : freq) {
    if (count >= min_frequency) ranked.emplace_back(gram, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.orders_ = orders;
  for (int order : orders) vocab.tokens_.push_back(unk_token(order));
  for (auto& [gram, count] : ranked) vocab.tokens_.push_back(gram);
  vocab.finalize();
  return vocab;
}

Vocabulary Vocabulary::build_word(
    std::span<const std::vector<std::string>> corpus) {
  if (corpus.empty()) throw ValidationError("cannot build vocabulary from empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& tokens : corpus) {
    for (const auto& token : tokens) ++freq[token];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.orders_ = {1};
  vocab.tokens_.push_back(kPadToken);
  vocab.tokens_.push_back(kUnkToken);
  for (auto& [token, count] : ranked) {
    if (token != kPadToken && token != kUnkToken) vocab.tokens_.push_back(token);
  }
  vocab.finalize();
  return vocab;
}

std::optional<std::uint32_t> Vocabulary::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token_at(std::uint32_t index) const {
  if (index >= tokens_.size()) {
    throw ValidationError("vocabulary index " + std::to_string(index) +
                          " out of range");
  }
  return tokens_[index];
}

std::uint32_t Vocabulary::unk_index(int order) const {
  const auto it = unk_.find(order);
  if (it == unk_.end()) {
    throw ValidationError("vocabulary has no ⟨UNK⟩ for order " +
                          std::to_string(order));
  }
  return it->second;
}

std::uint32_t Vocabulary::pad_index() const {
  if (!pad_) throw ValidationError("vocabulary has no ⟨PAD⟩ token");
  return *pad_;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << i << '\n';
  }
  write_file(path, out.str());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  Vocabulary vocab;
  const std::vector<std::string> lines = read_lines(path);
  vocab.tokens_.resize(lines.size());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t tab = lines[n].rfind('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": missing tab separator");
    }
    const std::size_t index = std::stoul(lines[n].substr(tab + 1));
    if (index >= vocab.tokens_.size() || !vocab.tokens_[index].empty()) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": bad vocabulary index");
    }
    vocab.tokens_[index] = lines[n].substr(0, tab);
  }
  vocab.finalize();
  for (const auto& [order, idx] : vocab.unk_) {
    if (order > 1) vocab.orders_.insert(order);
  }
  if (vocab.orders_.empty()) vocab.orders_ = {1};
  return vocab;
}

SparseVector vectorize(std::span<const std::string> tokens,
                       const Vocabulary& vocab) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& gram : extract_ngrams(tokens, vocab.orders())) {
    if (const auto index = vocab.index_of(gram)) {
      ++counts[*index];
    } else {
      ++counts[vocab.unk_index(ngram_order(gram))];
    }
  }
  SparseVector vec;
  vec.entries.assign(counts.begin(), counts.end());
  return vec;
}

std::vector<std::uint32_t> index_sequence(std::span<const std::string> tokens,
                                          const Vocabulary& word_vocab,
                                          std::size_t max_len) {
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  std::vector<std::uint32_t> out;
  out.reserve(max_len);
  const std::uint32_t unk = word_vocab.unk_index(1);
  for (const auto& token : tokens) {
    if (out.size() == max_len) break;
    out.push_back(word_vocab.index_of(token).value_or(unk));
  }
  out.resize(max_len, word_vocab.pad_index());
  return out;
}

}  // namespace threatscope::featurize
