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
// Vocabularies and input representations: sparse bag-of-ngram vectors for
// the linear model, token index sequences for the convolutional model.

#ifndef THREATSCOPE_FEATURIZE_HPP_
#define THREATSCOPE_FEATURIZE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace threatscope::featurize {

inline constexpr const char* kPadToken = "⟨PAD⟩";
inline constexpr const char* kUnkToken = "⟨UNK⟩";

// "⟨UNK_2⟩" etc.; one fold-in token per n-gram order.
std::string unk_token(int order);

struct SparseVector {
  // (feature index, count), indices strictly increasing, counts positive.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

  std::uint64_t total_count() const;
  bool operator==(const SparseVector&) const = default;
};

// Dense token-to-index mapping with reserved sentinel slots. Reserved
// tokens occupy the lowest indices (⟨PAD⟩ first when present, then the
// ⟨UNK⟩ tokens in ascending order); remaining tokens are ranked by
// (frequency desc, lexicographic).
class Vocabulary {
 public:
  // N-gram vocabulary over the training corpus: n-grams of the given
  // orders with frequency >= min_frequency keep an index, the rest fold
  // into their order's ⟨UNK⟩. Throws ValidationError on an empty corpus.
  static Vocabulary build_ngram(std::span<const std::vector<std::string>> corpus,
                                const std::set<int>& orders,
                                std::size_t min_frequency = 2);

  // Unigram vocabulary for the convolutional input path: every training
  // token (min frequency 1) plus ⟨PAD⟩ and ⟨UNK⟩.
  static Vocabulary build_word(std::span<const std::vector<std::string>> corpus);

  std::optional<std::uint32_t> index_of(const std::string& token) const;
  const std::string& token_at(std::uint32_t index) const;
  std::size_t size() const { return tokens_.size(); }

  const std::set<int>& orders() const { return orders_; }
  std::uint32_t unk_index(int order) const;  // ValidationError if absent
  std::uint32_t pad_index() const;           // ValidationError if absent
  bool has_pad() const { return pad_.has_value(); }

  // One "token<TAB>index" line per entry, in index order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  void finalize();  // rebuilds the lookup map and sentinel slots

  std::vector<std::string> tokens_;  // index -> token
  std::unordered_map<std::string, std::uint32_t> index_;
  std::set<int> orders_;
  std::unordered_map<int, std::uint32_t> unk_;
  std::optional<std::uint32_t> pad_;
};

// All contiguous n-grams of every requested order, space-joined, emitted
// by ascending order then position.
std::vector<std::string> extract_ngrams(std::span<const std::string> tokens,
                                        const std::set<int>& orders);

// Bag-of-ngram counts; unknown n-grams land on their order's ⟨UNK⟩.
SparseVector vectorize(std::span<const std::string> tokens,
                       const Vocabulary& vocab);

// Per-token indices truncated / right-padded to max_len; OOV maps to ⟨UNK⟩.
std::vector<std::uint32_t> index_sequence(std::span<const std::string> tokens,
                                          const Vocabulary& word_vocab,
                                          std::size_t max_len);

}  // namespace threatscope::featurize

#endif  // THREATSCOPE_FEATURIZE_HPP_
