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

#include <doctest.h>

#include <cmath>

#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "test_util.hpp"

using namespace threatscope;
using glove::CooccurrenceTable;
using glove::EmbeddingMatrix;
using glove::GloveConfig;

namespace {

using Corpus = std::vector<std::vector<std::string>>;

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Two disjoint five-token cliques; tokens of a clique always co-occur.
Corpus clique_corpus(std::size_t repeats) {
  Corpus corpus;
  std::vector<std::string> a = {"a0", "a1", "a2", "a3", "a4"};
  std::vector<std::string> b = {"b0", "b1", "b2", "b3", "b4"};
  Rng rng(5);
  for (std::size_t r = 0; r < repeats; ++r) {
    shuffle(a, rng);
    shuffle(b, rng);
    corpus.push_back(a);
    corpus.push_back(b);
  }
  return corpus;
}

}  // namespace

TEST_CASE("co-occurrence counting uses 1/distance within tweets") {
  const Corpus pair = {{"a", "b"}};
  auto table = glove::count_cooccurrences(pair, 1);
  const auto a = *table.index_of("a");
  const auto b = *table.index_of("b");
  CHECK(table.at(a, b) == 1.0);
  CHECK(table.at(b, a) == 1.0);

  const Corpus spaced = {{"a", "x", "b"}};
  auto table2 = glove::count_cooccurrences(spaced, 2);
  CHECK(table2.at(*table2.index_of("a"), *table2.index_of("b")) == 0.5);

  const Corpus singles = {{"a"}, {"b"}};
  CHECK(glove::count_cooccurrences(singles, 3).entry_count() == 0);
}

TEST_CASE("counting never crosses tweet boundaries") {
  const Corpus corpus = {{"a", "b"}, {"c", "d"}};
  auto table = glove::count_cooccurrences(corpus, 10);
  CHECK(table.at(*table.index_of("a"), *table.index_of("c")) == 0.0);
  CHECK(table.at(*table.index_of("b"), *table.index_of("d")) == 0.0);
}

TEST_CASE("the table is symmetric under symmetric windows") {
  Rng rng(3);
  Corpus corpus;
  for (int t = 0; t < 30; ++t) {
    std::vector<std::string> tokens;
    const std::size_t len = 1 + uniform_index(rng, 8);
    for (std::size_t i = 0; i < len; ++i) {
      tokens.push_back("w" + std::to_string(uniform_index(rng, 6)));
    }
    corpus.push_back(std::move(tokens));
  }
  auto table = glove::count_cooccurrences(corpus, 4);
  for (const auto& e : table.sorted_entries()) {
    CHECK(table.at(e.context, e.word) == doctest::Approx(e.weight).epsilon(1e-15));
  }
}

TEST_CASE("glove weighting caps at one and is monotone") {
  CHECK(glove::glove_weight(100.0, 100.0, 0.75) == 1.0);
  CHECK(glove::glove_weight(200.0, 100.0, 0.75) == 1.0);
  CHECK(glove::glove_weight(100.0 / 16.0, 100.0, 0.75) ==
        doctest::Approx(std::pow(1.0 / 16.0, 0.75)).epsilon(1e-12));
  double prev = 0.0;
  for (double x = 0.5; x <= 120.0; x += 0.5) {
    const double w = glove::glove_weight(x, 100.0, 0.75);
    CHECK(w >= prev);
    prev = w;
  }
  // Continuity at x_max.
  CHECK(glove::glove_weight(100.0 - 1e-9, 100.0, 0.75) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(glove::glove_weight(0.0, 100.0, 0.75), ValidationError);
}

TEST_CASE("training reduces the weighted objective") {
  const Corpus corpus = clique_corpus(40);
  auto table = glove::count_cooccurrences(corpus, 10);
  GloveConfig config;
  config.dim = 16;
  config.epochs = 25;
  config.seed = 11;
  GloveConfig init_config = config;
  init_config.epochs = 0;
  const auto initial = glove::train_embeddings(table, init_config);
  const auto trained = glove::train_embeddings(table, config);
  CHECK(glove::objective(table, trained, config) <
        glove::objective(table, initial, config));
}

TEST_CASE("a single pair converges to its log count") {
  CooccurrenceTable table;
  const auto a = table.intern("a");
  const auto b = table.intern("b");
  table.add(a, b, std::exp(1.0));
  GloveConfig config;
  config.dim = 8;
  config.epochs = 4000;
  config.seed = 3;
  const auto emb = glove::train_embeddings(table, config);
  double pred = emb.main_bias[a] + emb.context_bias[b];
  for (std::size_t k = 0; k < emb.dim; ++k) {
    pred += emb.main[a * emb.dim + k] * emb.context[b * emb.dim + k];
  }
  CHECK(pred == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("clique structure separates in embedding space") {
  const Corpus corpus = clique_corpus(60);
  auto table = glove::count_cooccurrences(corpus, 10);
  GloveConfig config;
  config.dim = 16;
  config.epochs = 30;
  config.seed = 7;
  const auto emb = glove::train_embeddings(table, config);
  double within = 0.0;
  double cross = 0.0;
  int within_n = 0;
  int cross_n = 0;
  for (std::uint32_t i = 0; i < emb.tokens.size(); ++i) {
    for (std::uint32_t j = i + 1; j < emb.tokens.size(); ++j) {
      const double sim = cosine(emb.export_vector(i), emb.export_vector(j));
      if (emb.tokens[i][0] == emb.tokens[j][0]) {
        within += sim;
        ++within_n;
      } else {
        cross += sim;
        ++cross_n;
      }
    }
  }
  CHECK(within / within_n > cross / cross_n + 0.2);
}

TEST_CASE("fixed seeds reproduce embeddings bit-exactly") {
  const Corpus corpus = clique_corpus(10);
  auto table = glove::count_cooccurrences(corpus, 5);
  GloveConfig config;
  config.dim = 12;
  config.epochs = 5;
  config.seed = 42;
  const auto a = glove::train_embeddings(table, config);
  const auto b = glove::train_embeddings(table, config);
  REQUIRE(a.main.size() == b.main.size());
  for (std::size_t i = 0; i < a.main.size(); ++i) {
    CHECK(a.main[i] == b.main[i]);
    CHECK(a.context[i] == b.context[i]);
  }
  for (std::size_t i = 0; i < a.main_bias.size(); ++i) {
    CHECK(a.main_bias[i] == b.main_bias[i]);
    CHECK(a.context_bias[i] == b.context_bias[i]);
  }
}

TEST_CASE("nearest neighbors exclude the query and break ties by token") {
  EmbeddingMatrix emb;
  emb.dim = 2;
  emb.tokens = {"q", "same", "also", "ortho"};
  for (std::uint32_t i = 0; i < emb.tokens.size(); ++i) emb.index[emb.tokens[i]] = i;
  emb.main = {1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0};
  emb.context.assign(8, 0.0);
  emb.main_bias.assign(4, 0.0);
  emb.context_bias.assign(4, 0.0);

  CHECK(glove::nearest_neighbors(emb, "q", 0).empty());
  const auto top = glove::nearest_neighbors(emb, "q", 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].first == "also");  // cosine 1 tie with "same", lexicographic
  CHECK(top[1].first == "same");
  CHECK(top[2].first == "ortho");
  for (const auto& [token, sim] : top) CHECK(token != "q");
  CHECK_THROWS_AS(glove::nearest_neighbors(emb, "absent", 2), ValidationError);
}

TEST_CASE("embedding and table files round-trip") {
  tstest::TempDir dir("glove");
  const Corpus corpus = clique_corpus(5);
  auto table = glove::count_cooccurrences(corpus, 4);
  GloveConfig config;
  config.dim = 6;
  config.epochs = 3;
  const auto emb = glove::train_embeddings(table, config);

  glove::save_embeddings(dir.file("vec.txt"), emb);
  const auto loaded = glove::load_embedding_vectors(dir.file("vec.txt"));
  REQUIRE(loaded.size() == emb.tokens.size());
  for (std::uint32_t i = 0; i < emb.tokens.size(); ++i) {
    const auto& exported = emb.export_vector(i);
    const auto& read_back = loaded.at(emb.tokens[i]);
    REQUIRE(read_back.size() == exported.size());
    for (std::size_t k = 0; k < exported.size(); ++k) {
      CHECK(read_back[k] == exported[k]);
    }
  }

  table.save(dir.file("cooc.bin"), dir.file("cooc_tokens.txt"));
  const auto table2 =
      CooccurrenceTable::load(dir.file("cooc.bin"), dir.file("cooc_tokens.txt"));
  CHECK(table2.entry_count() == table.entry_count());
  for (const auto& e : table.sorted_entries()) {
    CHECK(table2.at(e.word, e.context) == e.weight);
  }
}
