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

#include "threatscope/glove.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"

static_assert(std::endian::native == std::endian::little,
              "co-occurrence files are little-endian");

namespace threatscope::glove {

namespace {

std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) {
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::uint32_t CooccurrenceTable::intern(const std::string& token) {
  const auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<std::uint32_t> CooccurrenceTable::index_of(
    const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& CooccurrenceTable::token_at(std::uint32_t index) const {
  if (index >= tokens_.size()) {
    throw ValidationError("co-occurrence token index out of range");
  }
  return tokens_[index];
}

void CooccurrenceTable::add(std::uint32_t word, std::uint32_t context,
                            double weight) {
  if (word >= tokens_.size() || context >= tokens_.size()) {
    throw ValidationError("co-occurrence pair outside vocabulary");
  }
  if (weight <= 0.0) throw ValidationError("co-occurrence weight must be positive");
  weights_[pair_key(word, context)] += weight;
}

double CooccurrenceTable::at(std::uint32_t word, std::uint32_t context) const {
  const auto it = weights_.find(pair_key(word, context));
  return it == weights_.end() ? 0.0 : it->second;
}

std::vector<CooccurrenceEntry> CooccurrenceTable::sorted_entries() const {
  std::vector<CooccurrenceEntry> entries;
  entries.reserve(weights_.size());
  for (const auto& [key, weight] : weights_) {
    entries.push_back({static_cast<std::uint32_t>(key >> 32),
                       static_cast<std::uint32_t>(key & 0xffffffffu), weight});
  }
  std::sort(entries.begin(), entries.end(),
            [](const CooccurrenceEntry& a, const CooccurrenceEntry& b) {
              if (a.word != b.word) return a.word < b.word;
              return a.context < b.context;
            });
  return entries;
}

void CooccurrenceTable::save(const std::filesystem::path& table_path,
                             const std::filesystem::path& tokens_path) const {
  std::string blob;
  const std::vector<CooccurrenceEntry> entries = sorted_entries();
  blob.reserve(entries.size() * 16);
  for (const CooccurrenceEntry& e : entries) {
    char record[16];
    std::memcpy(record, &e.word, 4);
    std::memcpy(record + 4, &e.context, 4);
    std::memcpy(record + 8, &e.weight, 8);
    blob.append(record, 16);
  }
  write_file(table_path, blob);
  std::ostringstream tokens;
  for (const std::string& t : tokens_) tokens << t << '\n';
  write_file(tokens_path, tokens.str());
}

CooccurrenceTable CooccurrenceTable::load(
    const std::filesystem::path& table_path,
    const std::filesystem::path& tokens_path) {
  CooccurrenceTable table;
  for (const std::string& token : read_lines(tokens_path)) {
    table.intern(token);
  }
  const std::string blob = read_file(table_path);
  if (blob.size() % 16 != 0) {
    throw ParseError(table_path.string() + ": truncated co-occurrence record");
  }
  for (std::size_t off = 0; off < blob.size(); off += 16) {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double w = 0.0;
    std::memcpy(&i, blob.data() + off, 4);
    std::memcpy(&j, blob.data() + off + 4, 4);
    std::memcpy(&w, blob.data() + off + 8, 8);
    table.add(i, j, w);
  }
  return table;
}

CooccurrenceTable count_cooccurrences(
    std::span<const std::vector<std::string>> corpus, std::size_t window) {
  if (window < 1) throw ValidationError("co-occurrence window must be >= 1");
  CooccurrenceTable table;
  for (const auto& tokens : corpus) {
    for (const std::string& token : tokens) table.intern(token);
  }
  for (const auto& tokens : corpus) {
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      const std::uint32_t i = *table.index_of(tokens[p]);
      const std::size_t limit = std::min(tokens.size(), p + window + 1);
      for (std::size_t q = p + 1; q < limit; ++q) {
        const std::uint32_t j = *table.index_of(tokens[q]);
        const double w = 1.0 / static_cast<double>(q - p);
        table.add(i, j, w);
        table.add(j, i, w);
      }
    }
  }
  return table;
}

double glove_weight(double x, double x_max, double alpha) {
  if (x <= 0.0) throw ValidationError("glove_weight requires x > 0");
  if (x >= x_max) return 1.0;
  return std::pow(x / x_max, alpha);
}

namespace {

EmbeddingMatrix initialize(const CooccurrenceTable& table,
                           const GloveConfig& config, Rng& rng) {
  EmbeddingMatrix emb;
  emb.dim = config.dim;
  emb.tokens.reserve(table.vocab_size());
  for (std::uint32_t i = 0; i < table.vocab_size(); ++i) {
    emb.tokens.push_back(table.token_at(i));
    emb.index.emplace(emb.tokens.back(), i);
  }
  const double scale = 0.5 / static_cast<double>(config.dim);
  const std::size_t n = table.vocab_size() * config.dim;
  emb.main.resize(n);
  emb.context.resize(n);
  for (double& v : emb.main) v = uniform_real(rng, -scale, scale);
  for (double& v : emb.context) v = uniform_real(rng, -scale, scale);
  emb.main_bias.assign(table.vocab_size(), 0.0);
  emb.context_bias.assign(table.vocab_size(), 0.0);
  return emb;
}

}  // namespace

EmbeddingMatrix train_embeddings(const CooccurrenceTable& table,
                                 const GloveConfig& config) {
  if (table.vocab_size() == 0) throw ValidationError("empty co-occurrence table");
  Rng rng(config.seed);
  EmbeddingMatrix emb = initialize(table, config, rng);
  std::vector<CooccurrenceEntry> entries = table.sorted_entries();
  if (entries.empty() || config.epochs == 0) return emb;

  const std::size_t d = config.dim;
  // AdaGrad accumulators start at 1 so the first steps are plain SGD.
  std::vector<double> acc_main(emb.main.size(), 1.0);
  std::vector<double> acc_context(emb.context.size(), 1.0);
  std::vector<double> acc_main_bias(table.vocab_size(), 1.0);
  std::vector<double> acc_context_bias(table.vocab_size(), 1.0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(entries, rng);
    for (const CooccurrenceEntry& e : entries) {
      double* wi = emb.main.data() + static_cast<std::size_t>(e.word) * d;
      double* wj = emb.context.data() + static_cast<std::size_t>(e.context) * d;
      double* ai = acc_main.data() + static_cast<std::size_t>(e.word) * d;
      double* aj = acc_context.data() + static_cast<std::size_t>(e.context) * d;
      double pred = emb.main_bias[e.word] + emb.context_bias[e.context];
      for (std::size_t k = 0; k < d; ++k) pred += wi[k] * wj[k];
      const double diff = pred - std::log(e.weight);
      const double g = 2.0 * glove_weight(e.weight, config.x_max, config.alpha) * diff;
      if (!std::isfinite(g)) {
        throw ValidationError("embedding training diverged");
      }
      for (std::size_t k = 0; k < d; ++k) {
        const double grad_i = g * wj[k];
        const double grad_j = g * wi[k];
        wi[k] -= config.learning_rate * grad_i / std::sqrt(ai[k]);
        wj[k] -= config.learning_rate * grad_j / std::sqrt(aj[k]);
        ai[k] += grad_i * grad_i;
        aj[k] += grad_j * grad_j;
      }
      emb.main_bias[e.word] -=
          config.learning_rate * g / std::sqrt(acc_main_bias[e.word]);
      emb.context_bias[e.context] -=
          config.learning_rate * g / std::sqrt(acc_context_bias[e.context]);
      acc_main_bias[e.word] += g * g;
      acc_context_bias[e.context] += g * g;
    }
  }
  return emb;
}

double objective(const CooccurrenceTable& table, const EmbeddingMatrix& emb,
                 const GloveConfig& config) {
  double total = 0.0;
  for (const CooccurrenceEntry& e : table.sorted_entries()) {
    double pred = emb.main_bias[e.word] + emb.context_bias[e.context];
    for (std::size_t k = 0; k < emb.dim; ++k) {
      pred += emb.main[e.word * emb.dim + k] * emb.context[e.context * emb.dim + k];
    }
    const double diff = pred - std::log(e.weight);
    total += glove_weight(e.weight, config.x_max, config.alpha) * diff * diff;
  }
  return total;
}

std::vector<double> EmbeddingMatrix::export_vector(std::uint32_t i) const {
  std::vector<double> v(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    v[k] = main[i * dim + k] + context[i * dim + k];
  }
  return v;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingMatrix& emb, const std::string& token, std::size_t k) {
  const auto it = emb.index.find(token);
  if (it == emb.index.end()) {
    throw ValidationError("token '" + token + "' not in embedding vocabulary");
  }
  const std::vector<double> query = emb.export_vector(it->second);
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(emb.tokens.size());
  for (std::uint32_t i = 0; i < emb.tokens.size(); ++i) {
    if (i == it->second) continue;
    scored.emplace_back(emb.tokens[i], cosine(query, emb.export_vector(i)));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingMatrix& emb) {
  std::ostringstream out;
  for (std::uint32_t i = 0; i < emb.tokens.size(); ++i) {
    out << emb.tokens[i];
    const std::vector<double> v = emb.export_vector(i);
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  }
  write_file(path, out.str());
}

EmbeddingMatrix matrix_from_vectors(
    const std::unordered_map<std::string, std::vector<double>>& vectors) {
  if (vectors.empty()) throw ValidationError("no embedding vectors given");
  EmbeddingMatrix emb;
  emb.dim = vectors.begin()->second.size();
  emb.tokens.reserve(vectors.size());
  for (const auto& [token, v] : vectors) emb.tokens.push_back(token);
  std::sort(emb.tokens.begin(), emb.tokens.end());
  emb.main.resize(vectors.size() * emb.dim, 0.0);
  emb.context.assign(vectors.size() * emb.dim, 0.0);
  emb.main_bias.assign(vectors.size(), 0.0);
  emb.context_bias.assign(vectors.size(), 0.0);
  for (std::uint32_t i = 0; i < emb.tokens.size(); ++i) {
    const std::vector<double>& v = vectors.at(emb.tokens[i]);
    if (v.size() != emb.dim) {
      throw ValidationError("embedding dimension mismatch for '" +
                            emb.tokens[i] + "'");
    }
    std::copy(v.begin(), v.end(), emb.main.begin() + i * emb.dim);
    emb.index.emplace(emb.tokens[i], i);
  }
  return emb;
}

std::unordered_map<std::string, std::vector<double>> load_embedding_vectors(
    const std::filesystem::path& path) {
  std::unordered_map<std::string, std::vector<double>> vectors;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const std::vector<std::string> fields = split(lines[n], ' ');
    if (fields.size() < 2) {
      throw ParseError(path.string() + ":" + std::to_string(n + 1) +
                       ": malformed embedding line");
    }
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      v.push_back(std::strtod(fields[i].c_str(), nullptr));
    }
    vectors[fields[0]] = std::move(v);
  }
  return vectors;
}

}  // namespace threatscope::glove
