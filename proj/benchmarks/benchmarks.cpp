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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "threatscope/convnet.hpp"
#include "threatscope/corpus.hpp"
#include "threatscope/featurize.hpp"
#include "threatscope/glove.hpp"
#include "threatscope/linker.hpp"
#include "threatscope/metrics.hpp"
#include "threatscope/rng.hpp"

namespace ts = threatscope;

namespace {

std::vector<std::string> sample_tokens(ts::Rng& rng, std::size_t n) {
  static const std::vector<std::string> pool = {
      "critical", "vulnerability", "patch",  "now",     "ddos",  "attack",
      "linux",    "kernel",        "flaw",   "millions", "users", "risk",
      "#infosec", "remote",        "code",   "execution"};
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tokens.push_back(pool[ts::uniform_index(rng, pool.size())]);
  }
  return tokens;
}

void BM_Tokenize(benchmark::State& state) {
  const std::string text =
      "RT @secalerts: Critical vulnerability in Apache Struts2 CVE-2017-5638 "
      "allows remote code execution, patch now! #infosec https://t.co/abc123";
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::corpus::tokenize(text));
  }
}
BENCHMARK(BM_Tokenize);

void BM_JaccardDedup(benchmark::State& state) {
  ts::Rng rng(1);
  std::vector<ts::corpus::Tweet> tweets;
  for (int i = 0; i < state.range(0); ++i) {
    ts::corpus::Tweet t;
    t.id = "t" + std::to_string(i);
    t.posted_at = 1500000000 + i;
    const auto tokens = sample_tokens(rng, 12);
    for (const auto& token : tokens) {
      t.text += token;
      t.text += ' ';
    }
    tweets.push_back(std::move(t));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::corpus::dedup_by_jaccard(tweets, 0.7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_JaccardDedup)->Arg(200)->Arg(1000);

void BM_Vectorize(benchmark::State& state) {
  ts::Rng rng(2);
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 500; ++i) corpus.push_back(sample_tokens(rng, 14));
  const auto vocab = ts::featurize::Vocabulary::build_ngram(corpus, {2, 3, 4});
  const auto tokens = sample_tokens(rng, 14);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::featurize::vectorize(tokens, vocab));
  }
}
BENCHMARK(BM_Vectorize);

void BM_CnnForward(benchmark::State& state) {
  ts::Rng rng(3);
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(sample_tokens(rng, 20));
  const auto vocab = ts::featurize::Vocabulary::build_word(corpus);
  ts::convnet::ConvTrainConfig config;
  config.embed_dim = 50;
  config.filters_per_width = 100;
  config.max_len = 64;
  const auto model = ts::convnet::initialize_model(vocab, {}, config);
  const auto indices =
      ts::featurize::index_sequence(sample_tokens(rng, 20), vocab, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::convnet::forward(model, indices));
  }
}
BENCHMARK(BM_CnnForward);

void BM_CnnTrainStep(benchmark::State& state) {
  ts::Rng rng(4);
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(sample_tokens(rng, 20));
  const auto vocab = ts::featurize::Vocabulary::build_word(corpus);
  ts::convnet::ConvTrainConfig config;
  config.embed_dim = 50;
  config.filters_per_width = 100;
  config.max_len = 64;
  auto model = ts::convnet::initialize_model(vocab, {}, config);
  const auto indices =
      ts::featurize::index_sequence(sample_tokens(rng, 20), vocab, 64);
  ts::convnet::AdamState embed_state;
  for (auto _ : state) {
    const auto cache = ts::convnet::forward(model, indices);
    auto grads = ts::convnet::backward(model, cache, true);
    ts::convnet::adam_step(model.embeddings, grads.embeddings, embed_state, {});
    benchmark::DoNotOptimize(model.embeddings.data());
  }
}
BENCHMARK(BM_CnnTrainStep);

void BM_PrAuc(benchmark::State& state) {
  ts::Rng rng(5);
  std::vector<ts::metrics::ScoredLabel> items;
  for (int i = 0; i < state.range(0); ++i) {
    items.push_back({ts::uniform_real(rng), ts::uniform_index(rng, 2) == 1,
                     std::to_string(i)});
  }
  items[0].positive = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::metrics::pr_auc(items));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PrAuc)->Arg(1000)->Arg(10000);

void BM_ExtractCves(benchmark::State& state) {
  const std::string page =
      "Advisory roundup: CVE-2017-5638 under mass exploitation, see also "
      "cve-2016-5195 and CVE-2017-0144 for related kernel and SMB issues. "
      "Mitigations listed per CVE below.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::linker::extract_cves(page));
  }
}
BENCHMARK(BM_ExtractCves);

void BM_GloveEpoch(benchmark::State& state) {
  ts::Rng rng(6);
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 400; ++i) corpus.push_back(sample_tokens(rng, 16));
  const auto table = ts::glove::count_cooccurrences(corpus, 10);
  ts::glove::GloveConfig config;
  config.dim = 50;
  config.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts::glove::train_embeddings(table, config));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(table.entry_count()));
}
BENCHMARK(BM_GloveEpoch);

}  // namespace

BENCHMARK_MAIN();
