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
// Domain word embeddings: weighted co-occurrence counting and AdaGrad
// training of the GloVe least-squares objective.

#ifndef THREATSCOPE_GLOVE_HPP_
#define THREATSCOPE_GLOVE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace threatscope::glove {

struct CooccurrenceEntry {
  std::uint32_t word = 0;
  std::uint32_t context = 0;
  double weight = 0.0;
};

// Sparse symmetric table of distance-weighted co-occurrence counts.
class CooccurrenceTable {
 public:
  std::uint32_t intern(const std::string& token);
  std::optional<std::uint32_t> index_of(const std::string& token) const;
  const std::string& token_at(std::uint32_t index) const;
  std::size_t vocab_size() const { return tokens_.size(); }
  std::size_t entry_count() const { return weights_.size(); }

  void add(std::uint32_t word, std::uint32_t context, double weight);
  double at(std::uint32_t word, std::uint32_t context) const;  // 0 if absent

  // All entries sorted by (word, context); the deterministic base order
  // for training shuffles and serialization.
  std::vector<CooccurrenceEntry> sorted_entries() const;

  // Binary little-endian triples (u32 word, u32 context, f64 weight) plus a
  // sidecar text file mapping indices to tokens (one per line).
  void save(const std::filesystem::path& table_path,
            const std::filesystem::path& tokens_path) const;
  static CooccurrenceTable load(const std::filesystem::path& table_path,
                                const std::filesystem::path& tokens_path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::unordered_map<std::uint64_t, double> weights_;
};

struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<double> main;       // vocab x dim
  std::vector<double> context;    // vocab x dim
  std::vector<double> main_bias;
  std::vector<double> context_bias;

  // Export vector w + w~, the combination written to disk and used for
  // similarity queries.
  std::vector<double> export_vector(std::uint32_t i) const;
};

struct GloveConfig {
  std::size_t dim = 50;
  std::size_t window = 10;
  double x_max = 100.0;
  double alpha = 0.75;
  double learning_rate = 0.05;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
};

// Accumulates 1/distance for each pair within `window` positions of the
// same tweet, symmetrically. Never crosses tweet boundaries.
CooccurrenceTable count_cooccurrences(
    std::span<const std::vector<std::string>> corpus, std::size_t window);

// (x/x_max)^alpha capped at 1.
double glove_weight(double x, double x_max, double alpha);

// Minimizes sum f(X_ij) (w_i.w~_j + b_i + b~_j - ln X_ij)^2 with
// per-coordinate AdaGrad over shuffled entries. Bit-identical output under
// a fixed seed. epochs = 0 returns the (seeded) initialization.
EmbeddingMatrix train_embeddings(const CooccurrenceTable& table,
                                 const GloveConfig& config);

// Total weighted squared error of an embedding against a table.
double objective(const CooccurrenceTable& table, const EmbeddingMatrix& emb,
                 const GloveConfig& config);

// Top-k other tokens by cosine similarity of export vectors, ties broken
// lexicographically. Throws ValidationError for an unknown query token.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingMatrix& emb, const std::string& token, std::size_t k);

// Text format: "token v1 ... vd" per line (export vectors).
void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingMatrix& emb);
// Loads export vectors; main gets the stored values, context stays zero.
std::unordered_map<std::string, std::vector<double>> load_embedding_vectors(
    const std::filesystem::path& path);

// Matrix over stored export vectors (context half zero), tokens in sorted
// order; lets neighbor queries run on a loaded embedding file.
EmbeddingMatrix matrix_from_vectors(
    const std::unordered_map<std::string, std::vector<double>>& vectors);

}  // namespace threatscope::glove

#endif  // THREATSCOPE_GLOVE_HPP_
