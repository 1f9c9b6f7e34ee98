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
// threatscope: pipeline CLI. Stages read a [section]key=value config file
// (flags override), write their artifacts into the output directory, and
// record a manifest with the effective config, seed, and input digests.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "threatscope/annotation.hpp"
#include "threatscope/convnet.hpp"
#include "threatscope/corpus.hpp"
#include "threatscope/error.hpp"
#include "threatscope/featurize.hpp"
#include "threatscope/forecast.hpp"
#include "threatscope/glove.hpp"
#include "threatscope/insights.hpp"
#include "threatscope/linear_model.hpp"
#include "threatscope/linker.hpp"
#include "threatscope/metrics.hpp"
#include "threatscope/nvd.hpp"
#include "threatscope/pipeline_config.hpp"
#include "threatscope/text_util.hpp"

namespace ts = threatscope;
namespace fs = std::filesystem;
using nlohmann::json;
using ts::pipeline::ManifestWriter;
using ts::pipeline::PipelineConfig;

namespace {

// Tracks files created by a stage so a failing run leaves no partial
// outputs behind.
class Stage {
 public:
  Stage(std::string name, const PipelineConfig& config)
      : manifest_(name, config), config_(config), out_dir_(config.output_dir()) {}

  const PipelineConfig& config() const { return config_; }
  const fs::path& out_dir() const { return out_dir_; }

  fs::path input(const fs::path& path) {
    manifest_.add_input(path);
    return path;
  }

  fs::path target(const std::string& name) {
    const fs::path path = out_dir_ / name;
    created_.push_back(path);
    return path;
  }

  void finish() {
    for (const fs::path& path : created_) manifest_.add_output(path);
    manifest_.write(out_dir_);
    created_.clear();
  }

  void discard() {
    std::error_code ec;
    for (const fs::path& path : created_) fs::remove(path, ec);
  }

 private:
  ManifestWriter manifest_;
  const PipelineConfig& config_;
  fs::path out_dir_;
  std::vector<fs::path> created_;
};

int run_stage(const std::string& name, const PipelineConfig& config,
              const std::function<void(Stage&)>& body) {
  Stage stage(name, config);
  try {
    body(stage);
    stage.finish();
    return 0;
  } catch (...) {
    stage.discard();
    throw;
  }
}

std::unordered_map<std::string, bool> label_map(
    const fs::path& path, ts::annotation::Phase phase) {
  std::unordered_map<std::string, bool> labels;
  for (const auto& l : ts::annotation::read_labels_jsonl(path)) {
    if (l.phase == phase) labels[l.tweet_id] = l.label;
  }
  return labels;
}

std::vector<std::vector<std::string>> token_lists(
    const std::vector<ts::corpus::Instance>& instances) {
  std::vector<std::vector<std::string>> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(inst.tokens);
  return out;
}

// ---------------------------------------------------------------------------
// corpus

void cmd_corpus_ingest(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.tweets"));
  const std::vector<ts::corpus::Tweet> tweets = ts::corpus::read_tweets_jsonl(in);
  std::ostringstream out;
  std::size_t instances = 0;
  for (const ts::corpus::Tweet& tweet : tweets) {
    json base;
    base["id"] = tweet.id;
    base["created_at"] = ts::format_rfc3339(tweet.posted_at);
    base["user"] = tweet.author;
    base["text"] = tweet.text;
    base["urls"] = tweet.urls;
    json entities = json::array();
    for (const auto& e : tweet.entities) {
      entities.push_back(
          {{"start", e.byte_start}, {"end", e.byte_end}, {"surface", e.surface}});
    }
    base["entities"] = entities;
    if (tweet.entities.empty()) {
      json j = base;
      j["target_entity"] = "";
      j["tokens"] = ts::corpus::normalize(tweet, std::nullopt).tokens;
      out << j.dump() << '\n';
      ++instances;
    }
    for (std::size_t e = 0; e < tweet.entities.size(); ++e) {
      const ts::corpus::Instance inst = ts::corpus::normalize(tweet, e);
      json j = base;
      j["target_entity"] = inst.target_entity;
      j["tokens"] = inst.tokens;
      out << j.dump() << '\n';
      ++instances;
    }
  }
  ts::write_file(stage.target("instances.jsonl"), out.str());
  std::fprintf(stderr, "ingested %zu tweets into %zu instances\n", tweets.size(),
               instances);
}

void cmd_corpus_dedup(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.tweets"));
  const std::vector<ts::corpus::Tweet> tweets = ts::corpus::read_tweets_jsonl(in);
  const std::string method = stage.config().get_or("corpus.method", "jaccard");
  std::vector<ts::corpus::Tweet> kept;
  if (method == "jaccard") {
    kept = ts::corpus::dedup_by_jaccard(
        tweets, stage.config().get_double("corpus.jaccard_threshold", 0.7));
  } else if (method == "lcs") {
    kept = ts::corpus::dedup_by_lcs(
        tweets, stage.config().get_double("corpus.lcs_ratio", 0.5));
  } else {
    throw ts::ConfigError("corpus.method must be jaccard or lcs, got '" +
                          method + "'");
  }
  ts::corpus::write_tweets_jsonl(stage.target("tweets_dedup.jsonl"), kept);
  std::fprintf(stderr, "kept %zu of %zu tweets (%s)\n", kept.size(),
               tweets.size(), method.c_str());
}

void cmd_corpus_split(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.instances"));
  const std::vector<ts::corpus::Instance> instances =
      ts::corpus::read_instances_jsonl(in);
  ts::corpus::SplitSpec spec;
  if (stage.config().has("split.dev_fraction") ||
      stage.config().has("split.test_fraction")) {
    spec = ts::corpus::SplitSpec::from_fractions(
        stage.config().seed(), instances.size(),
        stage.config().get_double("split.dev_fraction", 0.0),
        stage.config().get_double("split.test_fraction", 0.0));
  } else {
    spec.seed = stage.config().seed();
    spec.train = static_cast<std::size_t>(stage.config().get_int("split.train", 0));
    spec.dev = static_cast<std::size_t>(stage.config().get_int("split.dev", 0));
    spec.test = static_cast<std::size_t>(stage.config().get_int("split.test", 0));
  }
  const ts::corpus::Splits splits = ts::corpus::split(instances, spec);
  ts::corpus::write_instances_jsonl(stage.target("train.jsonl"), splits.train);
  ts::corpus::write_instances_jsonl(stage.target("dev.jsonl"), splits.dev);
  ts::corpus::write_instances_jsonl(stage.target("test.jsonl"), splits.test);
}

// ---------------------------------------------------------------------------
// annotate

void cmd_annotate_aggregate(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.votes"));
  const auto phase =
      ts::annotation::parse_phase(stage.config().get_or("annotate.phase", "existence"));
  const std::vector<ts::annotation::Vote> votes =
      ts::annotation::read_votes_csv(in);
  const auto labels = ts::annotation::aggregate(
      votes, phase, stage.config().get_bool("annotate.strict", true));
  ts::annotation::write_labels_jsonl(
      stage.target("labels_" + ts::annotation::to_string(phase) + ".jsonl"),
      labels);
}

void cmd_annotate_filter_workers(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.votes"));
  const std::vector<ts::annotation::Vote> votes =
      ts::annotation::read_votes_csv(in);
  const auto kept = ts::annotation::filter_workers(
      votes, stage.config().get_double("annotate.min_agreement", 0.5));
  ts::annotation::write_votes_csv(stage.target("votes_filtered.csv"), kept);
  std::fprintf(stderr, "kept %zu of %zu votes\n", kept.size(), votes.size());
}

// Two-column "id,label" CSVs joined on id.
void cmd_annotate_kappa(Stage& stage) {
  const fs::path path_a = stage.input(stage.config().require_path("annotate.labels_a"));
  const fs::path path_b = stage.input(stage.config().require_path("annotate.labels_b"));
  const auto load = [](const fs::path& path) {
    std::map<std::string, std::string> out;
    const std::vector<std::string> lines = ts::read_lines(path);
    for (std::size_t n = 1; n < lines.size(); ++n) {  // header skipped
      if (ts::trim(lines[n]).empty()) continue;
      const auto fields = ts::split_csv_line(lines[n]);
      if (fields.size() < 2) {
        throw ts::ParseError(path.string() + ":" + std::to_string(n + 1) +
                             ": expected id,label");
      }
      out[fields[0]] = fields[1];
    }
    return out;
  };
  const auto a = load(path_a);
  const auto b = load(path_b);
  std::vector<std::string> seq_a;
  std::vector<std::string> seq_b;
  for (const auto& [id, label] : a) {
    const auto it = b.find(id);
    if (it == b.end()) continue;
    seq_a.push_back(label);
    seq_b.push_back(it->second);
  }
  const double kappa = ts::annotation::cohens_kappa(seq_a, seq_b);
  json j;
  j["kappa"] = kappa;
  j["items"] = seq_a.size();
  ts::write_file(stage.target("kappa.json"), j.dump(2) + "\n");
  std::printf("kappa %.4f over %zu items\n", kappa, seq_a.size());
}

// ---------------------------------------------------------------------------
// embed

ts::glove::GloveConfig glove_config(const PipelineConfig& config) {
  ts::glove::GloveConfig g;
  g.dim = static_cast<std::size_t>(config.get_int("embed.dim", 50));
  g.window = static_cast<std::size_t>(config.get_int("embed.window", 10));
  g.x_max = config.get_double("embed.x_max", 100.0);
  g.alpha = config.get_double("embed.alpha", 0.75);
  g.learning_rate = config.get_double("embed.learning_rate", 0.05);
  g.epochs = static_cast<std::size_t>(config.get_int("embed.epochs", 15));
  g.seed = config.seed();
  return g;
}

void cmd_embed_train(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.instances"));
  const auto instances = ts::corpus::read_instances_jsonl(in);
  const auto corpus = token_lists(instances);
  const ts::glove::GloveConfig config = glove_config(stage.config());
  const auto table = ts::glove::count_cooccurrences(corpus, config.window);
  const auto emb = ts::glove::train_embeddings(table, config);
  table.save(stage.target("cooccurrence.bin"),
             stage.target("cooccurrence_tokens.txt"));
  ts::glove::save_embeddings(stage.target("embeddings.txt"), emb);
  std::fprintf(stderr, "trained %zu-dim embeddings for %zu tokens, loss %.4f\n",
               emb.dim, emb.tokens.size(),
               ts::glove::objective(table, emb, config));
}

void cmd_embed_neighbors(const PipelineConfig& config, const std::string& token,
                         std::size_t k) {
  const auto vectors =
      ts::glove::load_embedding_vectors(config.require_path("paths.embeddings"));
  const auto emb = ts::glove::matrix_from_vectors(vectors);
  for (const auto& [neighbor, cosine] : ts::glove::nearest_neighbors(emb, token, k)) {
    std::printf("%s\t%.6f\n", neighbor.c_str(), cosine);
  }
}

// ---------------------------------------------------------------------------
// train

struct LabeledSplits {
  std::vector<ts::corpus::Instance> train;
  std::vector<ts::corpus::Instance> dev;
  std::vector<ts::corpus::Instance> test;
  std::unordered_map<std::string, bool> labels;
};

LabeledSplits load_labeled_splits(Stage& stage, ts::annotation::Phase phase) {
  LabeledSplits out;
  out.train = ts::corpus::read_instances_jsonl(
      stage.input(stage.config().require_path("paths.train")));
  out.dev = ts::corpus::read_instances_jsonl(
      stage.input(stage.config().require_path("paths.dev")));
  out.test = ts::corpus::read_instances_jsonl(
      stage.input(stage.config().require_path("paths.test")));
  out.labels =
      label_map(stage.input(stage.config().require_path("paths.labels")), phase);
  return out;
}

template <typename MakeExample>
auto labeled_examples(const std::vector<ts::corpus::Instance>& instances,
                      const std::unordered_map<std::string, bool>& labels,
                      const MakeExample& make) {
  std::vector<decltype(make(instances.front(), true))> out;
  std::size_t skipped = 0;
  for (const auto& inst : instances) {
    const auto it = labels.find(inst.tweet_id);
    if (it == labels.end()) {
      ++skipped;
      continue;
    }
    out.push_back(make(inst, it->second));
  }
  if (skipped > 0) {
    std::fprintf(stderr, "skipped %zu unlabeled instances\n", skipped);
  }
  return out;
}

void write_curve(Stage& stage, const std::string& name,
                 const std::vector<double>& loss, const std::vector<double>& auc) {
  std::ostringstream out;
  out << "epoch,train_loss,dev_auc\n";
  for (std::size_t i = 0; i < loss.size(); ++i) {
    out << (i + 1) << ',' << ts::format_double(loss[i]) << ','
        << ts::format_double(auc[i]) << '\n';
  }
  ts::write_file(stage.target(name), out.str());
}

void cmd_train_lr(Stage& stage, const std::string& task,
                  ts::annotation::Phase phase) {
  const LabeledSplits data = load_labeled_splits(stage, phase);
  const auto vocab = ts::featurize::Vocabulary::build_ngram(
      token_lists(data.train), {2, 3, 4},
      static_cast<std::size_t>(stage.config().get_int("lr.min_frequency", 2)));
  const auto make = [&vocab](const ts::corpus::Instance& inst, bool label) {
    return ts::linmodel::Example{ts::featurize::vectorize(inst.tokens, vocab),
                                 label};
  };
  const auto train_set = labeled_examples(data.train, data.labels, make);
  const auto dev_set = labeled_examples(data.dev, data.labels, make);
  const auto test_set = labeled_examples(data.test, data.labels, make);

  ts::linmodel::TrainConfig config;
  config.learning_rate = stage.config().get_double("lr.learning_rate", 0.5);
  config.epochs = static_cast<std::size_t>(stage.config().get_int("lr.epochs", 300));
  config.l2 = stage.config().get_double("lr.l2", 1e-4);
  const ts::linmodel::TrainResult result =
      ts::linmodel::train(train_set, dev_set, vocab.size(), config);

  vocab.save(stage.target("ngrams_" + task + ".vocab"));
  ts::linmodel::save_model(stage.target("lr_" + task + ".model"), result.model);
  write_curve(stage, "train_curve_" + task + "_lr.csv", result.train_loss,
              result.dev_auc);

  std::ostringstream features;
  features << "ngram,weight\n";
  for (const auto& [gram, weight] :
       ts::linmodel::top_features(result.model, vocab, 20)) {
    features << ts::csv_escape(gram) << ',' << ts::format_double(weight) << '\n';
  }
  ts::write_file(stage.target("features_" + task + "_lr.csv"), features.str());

  std::vector<ts::metrics::ScoredLabel> test_scored;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    test_scored.push_back({ts::linmodel::predict(result.model, test_set[i].features),
                           test_set[i].positive, std::to_string(i)});
  }
  json summary;
  summary["task"] = task;
  summary["model"] = "lr";
  summary["best_epoch"] = result.best_epoch;
  summary["dev_auc"] = result.dev_auc.empty()
                           ? 0.0
                           : result.dev_auc[result.best_epoch - 1];
  summary["test_auc"] = ts::metrics::pr_auc(test_scored);
  ts::write_file(stage.target("summary_" + task + "_lr.json"),
                 summary.dump(2) + "\n");
  std::fprintf(stderr, "lr %s: dev auc %.4f, test auc %.4f\n", task.c_str(),
               summary["dev_auc"].get<double>(), summary["test_auc"].get<double>());
}

ts::convnet::ConvTrainConfig conv_config(const PipelineConfig& config) {
  ts::convnet::ConvTrainConfig c;
  c.embed_dim = static_cast<std::size_t>(config.get_int("cnn.dim", 50));
  c.filters_per_width =
      static_cast<std::size_t>(config.get_int("cnn.filters", 100));
  c.max_len = static_cast<std::size_t>(config.get_int("cnn.max_len", 64));
  c.epochs = static_cast<std::size_t>(config.get_int("cnn.epochs", 5));
  c.adam.learning_rate = config.get_double("cnn.learning_rate", 0.001);
  c.seed = config.seed();
  return c;
}

void cmd_train_cnn(Stage& stage, const std::string& task,
                   ts::annotation::Phase phase) {
  const LabeledSplits data = load_labeled_splits(stage, phase);
  const auto vocab = ts::featurize::Vocabulary::build_word(token_lists(data.train));
  const ts::convnet::ConvTrainConfig config = conv_config(stage.config());
  const auto make = [&](const ts::corpus::Instance& inst, bool label) {
    return ts::convnet::ConvExample{
        ts::featurize::index_sequence(inst.tokens, vocab, config.max_len), label};
  };
  const auto train_set = labeled_examples(data.train, data.labels, make);
  const auto dev_set = labeled_examples(data.dev, data.labels, make);
  const auto test_set = labeled_examples(data.test, data.labels, make);

  std::unordered_map<std::string, std::vector<double>> pretrained;
  if (stage.config().has("paths.embeddings")) {
    pretrained = ts::glove::load_embedding_vectors(
        stage.input(stage.config().require_path("paths.embeddings")));
  }
  const ts::convnet::ConvTrainResult result =
      ts::convnet::train_cnn(train_set, dev_set, vocab, pretrained, config);

  vocab.save(stage.target("words_" + task + ".vocab"));
  ts::convnet::save_model(stage.target("cnn_" + task + ".model"), result.model);
  write_curve(stage, "train_curve_" + task + "_cnn.csv", result.epoch_loss,
              result.dev_auc);

  std::vector<ts::metrics::ScoredLabel> test_scored;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    test_scored.push_back(
        {ts::convnet::forward(result.model, test_set[i].indices).probability,
         test_set[i].positive, std::to_string(i)});
  }
  json summary;
  summary["task"] = task;
  summary["model"] = "cnn";
  summary["best_epoch"] = result.best_epoch;
  summary["dev_auc"] = result.dev_auc.empty()
                           ? 0.0
                           : result.dev_auc[result.best_epoch - 1];
  summary["test_auc"] = ts::metrics::pr_auc(test_scored);
  ts::write_file(stage.target("summary_" + task + "_cnn.json"),
                 summary.dump(2) + "\n");
  std::fprintf(stderr, "cnn %s: dev auc %.4f, test auc %.4f\n", task.c_str(),
               summary["dev_auc"].get<double>(), summary["test_auc"].get<double>());
}

// ---------------------------------------------------------------------------
// eval

void cmd_eval_pr(Stage& stage) {
  const fs::path in = stage.input(stage.config().require_path("paths.scores"));
  const std::vector<std::string> lines = ts::read_lines(in);
  if (lines.empty() || lines[0] != "id,score,positive") {
    throw ts::ParseError(in.string() + ": expected header id,score,positive");
  }
  std::vector<ts::metrics::ScoredLabel> items;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (ts::trim(lines[n]).empty()) continue;
    const auto fields = ts::split_csv_line(lines[n]);
    if (fields.size() != 3) {
      throw ts::ParseError(in.string() + ":" + std::to_string(n + 1) +
                           ": expected 3 fields");
    }
    items.push_back({std::strtod(fields[1].c_str(), nullptr), fields[2] == "1",
                     fields[0]});
  }
  ts::metrics::write_curve_csv(stage.target("pr_curve.csv"),
                               ts::metrics::pr_curve(items));
  ts::metrics::write_summary_json(stage.target("pr_summary.json"), items);
}

// ---------------------------------------------------------------------------
// link

void cmd_link_build(Stage& stage) {
  const fs::path tweets_path =
      stage.input(stage.config().require_path("paths.tweets"));
  const auto tweets = ts::corpus::read_tweets_jsonl(tweets_path);

  std::string cache_dir = stage.config().get_or("link.cache", "");
  if (const char* env = std::getenv("THREATSCOPE_CACHE_DIR")) cache_dir = env;
  if (cache_dir.empty()) {
    throw ts::ConfigError("link.cache (or THREATSCOPE_CACHE_DIR) is required");
  }
  auto cache = std::make_shared<ts::linker::OfflinePageCache>(cache_dir);
  std::unique_ptr<ts::linker::PageProvider> provider;
  if (stage.config().get_bool("link.live", false)) {
    provider = std::make_unique<ts::linker::LivePageFetcher>(cache);
  }
  ts::linker::PageProvider& pages = provider ? *provider : *cache;

  const ts::linker::LinkTable raw = ts::linker::build_link_table(tweets, pages);
  raw.save_csv(stage.target("links_raw.csv"));

  const auto store =
      ts::nvd::load_nvd(std::vector{stage.input(stage.config().require_path("paths.nvd"))});
  ts::linker::TimeConstraintConfig constraints;
  constraints.min_lead_days =
      static_cast<int>(stage.config().get_int("link.min_lead_days", 5));
  constraints.max_lead_days =
      static_cast<int>(stage.config().get_int("link.max_lead_days", 365));
  constraints.min_tweets =
      static_cast<std::size_t>(stage.config().get_int("link.min_tweets", 3));
  std::vector<std::string> warnings;
  const ts::linker::LinkTable filtered =
      ts::linker::apply_time_constraints(raw, store, constraints, &warnings);
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  filtered.save_csv(stage.target("links.csv"));
  std::fprintf(stderr, "linked %zu tweets to %zu CVEs; %zu CVEs after constraints\n",
               raw.tweet_count(), raw.by_cve().size(), filtered.by_cve().size());
}

void cmd_link_audit(const PipelineConfig& config, std::size_t sample) {
  const auto table =
      ts::linker::LinkTable::load_csv(config.require_path("paths.links"));
  for (const auto& [cve, tweet] :
       ts::linker::sample_links(table, sample, config.seed())) {
    std::printf("%s\t%s\t%s\t%s\n", cve.c_str(), tweet.tweet_id.c_str(),
                ts::format_rfc3339(tweet.posted_at).c_str(),
                tweet.stage == ts::linker::LinkStage::kExplicit ? "text" : "page");
  }
}

// ---------------------------------------------------------------------------
// forecast

std::unique_ptr<ts::forecast::SeverityScorer> load_scorer(Stage& stage) {
  const std::string kind = stage.config().get_or("forecast.model_kind", "cnn");
  if (kind == "lr") {
    auto model = ts::linmodel::load_model(
        stage.input(stage.config().require_path("forecast.model")));
    auto vocab = ts::featurize::Vocabulary::load(
        stage.input(stage.config().require_path("forecast.vocab")));
    return std::make_unique<ts::forecast::LrSeverityScorer>(std::move(model),
                                                            std::move(vocab));
  }
  if (kind == "cnn") {
    auto model = ts::convnet::load_model(
        stage.input(stage.config().require_path("forecast.model")));
    auto vocab = ts::featurize::Vocabulary::load(
        stage.input(stage.config().require_path("forecast.vocab")));
    return std::make_unique<ts::forecast::CnnSeverityScorer>(std::move(model),
                                                             std::move(vocab));
  }
  throw ts::ConfigError("forecast.model_kind must be lr or cnn, got '" + kind + "'");
}

void cmd_forecast_rank(Stage& stage, const std::string& scorer_name) {
  const auto table = ts::linker::LinkTable::load_csv(
      stage.input(stage.config().require_path("paths.links")));
  const auto store = ts::nvd::load_nvd(
      std::vector{stage.input(stage.config().require_path("paths.nvd"))});
  ts::nvd::ExploitSet exploits;
  if (stage.config().has("paths.exploits")) {
    exploits = ts::nvd::load_exploits(stage.config().path_list("paths.exploits"));
  }

  ts::forecast::Ranking ranking;
  if (scorer_name == "volume") {
    ranking = ts::forecast::rank(table, ts::forecast::ScorerKind::kVolume,
                                 nullptr, nullptr, &store);
  } else if (scorer_name == "true-cvss") {
    ranking = ts::forecast::rank(table, ts::forecast::ScorerKind::kTrueCvss,
                                 nullptr, nullptr, &store);
  } else if (scorer_name == "random") {
    ranking = ts::forecast::rank(table, ts::forecast::ScorerKind::kRandom,
                                 nullptr, nullptr, &store, stage.config().seed());
  } else if (scorer_name == "model") {
    const auto tweets = ts::corpus::read_tweets_jsonl(
        stage.input(stage.config().require_path("paths.tweets")));
    const auto index = ts::forecast::index_tweets(tweets);
    const auto scorer = load_scorer(stage);
    ranking = ts::forecast::rank(table, ts::forecast::ScorerKind::kModel,
                                 scorer.get(), &index, &store);
    // Per-tweet scores back the account-reliability analysis.
    std::ostringstream scores;
    scores << "tweet_id,score\n";
    for (const auto& [cve, linked] : table.by_cve()) {
      for (const auto& t : linked) {
        scores << ts::csv_escape(t.tweet_id) << ','
               << ts::format_double(scorer->score_tweet(index.at(t.tweet_id)))
               << '\n';
      }
    }
    ts::write_file(stage.target("tweet_scores.csv"), scores.str());
  } else {
    throw ts::ConfigError("unknown scorer '" + scorer_name + "'");
  }
  ts::forecast::save_ranking_csv(stage.target("ranking_" + scorer_name + ".csv"),
                                 ranking, table, store, exploits);
}

void cmd_forecast_eval(Stage& stage, const std::string& against) {
  const auto ranking = ts::forecast::load_ranking_csv(
      stage.input(stage.config().require_path("paths.ranking")));
  json j;
  j["against"] = against;
  if (against == "cvss") {
    const auto store = ts::nvd::load_nvd(
        std::vector{stage.input(stage.config().require_path("paths.nvd"))});
    const auto eval = ts::forecast::evaluate_vs_cvss(ranking, store);
    for (const auto& [k, p] : eval.precision_at) {
      j["p_at"][std::to_string(k)] = p;
    }
    j["pr_auc"] = eval.pr_auc;
  } else if (against == "exploits") {
    const auto exploits =
        ts::nvd::load_exploits(stage.config().path_list("paths.exploits"));
    if (exploits.empty()) {
      throw ts::ConfigError("paths.exploits lists no usable CVE ids");
    }
    const auto eval = ts::forecast::evaluate_vs_exploits(ranking, exploits);
    for (const auto& [k, p] : eval.precision_at) {
      j["p_at"][std::to_string(k)] = p;
    }
    for (const auto& [k, r] : eval.recall_at) {
      j["r_at"][std::to_string(k)] = r;
    }
  } else {
    throw ts::ConfigError("--against must be cvss or exploits");
  }
  ts::write_file(stage.target("forecast_eval_" + against + ".json"),
                 j.dump(2) + "\n");
  std::printf("%s\n", j.dump(2).c_str());
}

// ---------------------------------------------------------------------------
// insights

void cmd_insights_adjectives(Stage& stage) {
  const auto store = ts::nvd::load_nvd(
      std::vector{stage.input(stage.config().require_path("paths.nvd"))});
  const auto lexicon = ts::insights::load_lexicon(
      stage.input(stage.config().require_path("paths.lexicon")));
  std::vector<ts::insights::TokenizedDoc> severe_docs;
  std::vector<ts::insights::TokenizedDoc> other_docs;
  for (const std::string& id : store.sorted_ids()) {
    const ts::nvd::CveRecord* record = store.find(id);
    if (!record->cvss_v2 && !record->cvss_v3) continue;
    auto tokens = ts::corpus::tokenize(record->description);
    (ts::nvd::is_severe(*record) ? severe_docs : other_docs)
        .push_back(std::move(tokens));
  }
  const auto ranked = ts::insights::rank_adjectives(
      severe_docs, other_docs, lexicon,
      static_cast<std::size_t>(stage.config().get_int("insights.top_k", 50)),
      stage.config().get_double("insights.smoothing", 0.5));
  std::ostringstream out;
  out << "token,log_odds\n";
  for (const auto& [token, ratio] : ranked) {
    out << ts::csv_escape(token) << ',' << ts::format_double(ratio) << '\n';
  }
  ts::write_file(stage.target("adjectives.csv"), out.str());
}

void cmd_insights_temporal(Stage& stage) {
  const auto table = ts::linker::LinkTable::load_csv(
      stage.input(stage.config().require_path("paths.links")));
  const auto store = ts::nvd::load_nvd(
      std::vector{stage.input(stage.config().require_path("paths.nvd"))});
  const auto stats = ts::insights::delay_stats(
      table, store, static_cast<int>(stage.config().get_int("insights.min_lead", 1)));
  json j;
  j["cves"] = stats.leads.size();
  j["median_days"] = stats.median_days;
  j["within_60_days"] = stats.within_60_days;
  ts::write_file(stage.target("temporal.json"), j.dump(2) + "\n");
  std::printf("%s\n", j.dump(2).c_str());
}

void cmd_insights_accounts(Stage& stage) {
  const auto table = ts::linker::LinkTable::load_csv(
      stage.input(stage.config().require_path("paths.links")));
  const auto store = ts::nvd::load_nvd(
      std::vector{stage.input(stage.config().require_path("paths.nvd"))});
  const auto tweets = ts::corpus::read_tweets_jsonl(
      stage.input(stage.config().require_path("paths.tweets")));
  const fs::path scores_path =
      stage.input(stage.config().require_path("paths.scores"));
  std::unordered_map<std::string, double> scores;
  const std::vector<std::string> lines = ts::read_lines(scores_path);
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (ts::trim(lines[n]).empty()) continue;
    const auto fields = ts::split_csv_line(lines[n]);
    if (fields.size() < 2) {
      throw ts::ParseError(scores_path.string() + ":" + std::to_string(n + 1) +
                           ": expected tweet_id,score");
    }
    scores[fields[0]] = std::strtod(fields[1].c_str(), nullptr);
  }
  // insights.correctness=exploits scores a forecast by real exploitation
  // instead of the CVSS cutoff.
  ts::nvd::ExploitSet exploits;
  const bool use_exploits =
      stage.config().get_or("insights.correctness", "cvss") == "exploits";
  if (use_exploits) {
    exploits = ts::nvd::load_exploits(stage.config().path_list("paths.exploits"));
    if (exploits.empty()) {
      throw ts::ConfigError("insights.correctness=exploits needs paths.exploits");
    }
  }
  const auto stats = ts::forecast::account_reliability(
      table, scores, store, ts::forecast::index_tweets(tweets),
      static_cast<std::size_t>(stage.config().get_int("insights.min_tweets", 6)),
      stage.config().get_double("insights.score_floor", 0.5),
      use_exploits ? &exploits : nullptr);
  std::ostringstream out;
  out << "account,correct,forecasts,accuracy\n";
  for (const auto& s : stats) {
    out << ts::csv_escape(s.account) << ',' << s.correct << ',' << s.forecasts
        << ',' << ts::format_double(s.accuracy) << '\n';
  }
  ts::write_file(stage.target("accounts.csv"), out.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threat severity analysis and CVE forecasting pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  app.add_option("-c,--config", config_path, "pipeline config file");
  app.add_option("--set", overrides, "override a config key (section.key=value)")
      ->type_size(1);
  app.add_option("-o,--output", output_dir, "output directory");

  // Leaf-command extras.
  std::string phase = "existence";
  std::string method;
  std::string model = "lr";
  std::string scorer = "model";
  std::string against = "cvss";
  std::string token;
  std::size_t k = 10;
  std::size_t sample = 10;

  std::function<int(const PipelineConfig&)> action;

  CLI::App* corpus = app.add_subcommand("corpus", "corpus preparation");
  corpus->require_subcommand(1);
  corpus->add_subcommand("ingest", "normalize tweets into instances")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("corpus.ingest", c, cmd_corpus_ingest);
        };
      });
  CLI::App* dedup = corpus->add_subcommand("dedup", "drop near-duplicate tweets");
  dedup->add_option("--method", method, "jaccard or lcs");
  dedup->callback([&] {
    action = [&](const PipelineConfig& c) {
      PipelineConfig config = c;
      if (!method.empty()) config.set("corpus.method", method);
      return run_stage("corpus.dedup", config, cmd_corpus_dedup);
    };
  });
  corpus->add_subcommand("split", "deterministic train/dev/test split")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("corpus.split", c, cmd_corpus_split);
        };
      });

  CLI::App* annotate = app.add_subcommand("annotate", "crowd vote handling");
  annotate->require_subcommand(1);
  CLI::App* agg = annotate->add_subcommand("aggregate", "aggregate votes to labels");
  agg->add_option("--phase", phase, "existence or severity");
  agg->callback([&] {
    action = [&](const PipelineConfig& c) {
      PipelineConfig config = c;
      config.set("annotate.phase", phase);
      return run_stage("annotate.aggregate", config, cmd_annotate_aggregate);
    };
  });
  annotate->add_subcommand("kappa", "Cohen's kappa between two label files")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("annotate.kappa", c, cmd_annotate_kappa);
        };
      });
  annotate->add_subcommand("filter-workers", "drop low-agreement workers")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("annotate.filter-workers", c,
                           cmd_annotate_filter_workers);
        };
      });

  CLI::App* embed = app.add_subcommand("embed", "domain word embeddings");
  embed->require_subcommand(1);
  embed->add_subcommand("train", "train embeddings on an instance corpus")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("embed.train", c, cmd_embed_train);
        };
      });
  CLI::App* neighbors = embed->add_subcommand("neighbors", "nearest neighbors");
  neighbors->add_option("--token", token, "query token")->required();
  neighbors->add_option("--k", k, "neighbor count");
  neighbors->callback([&] {
    action = [&](const PipelineConfig& c) {
      cmd_embed_neighbors(c, token, k);
      return 0;
    };
  });

  CLI::App* train = app.add_subcommand("train", "train classifiers");
  train->require_subcommand(1);
  for (const char* task : {"existence", "severity"}) {
    CLI::App* sub = train->add_subcommand(task, std::string("train the ") + task +
                                                    " classifier");
    sub->add_option("--model", model, "lr or cnn");
    sub->callback([&, task] {
      action = [&, task](const PipelineConfig& c) {
        const auto ph = ts::annotation::parse_phase(task);
        if (model == "lr") {
          return run_stage(std::string("train.") + task + ".lr", c,
                           [&](Stage& s) { cmd_train_lr(s, task, ph); });
        }
        if (model == "cnn") {
          return run_stage(std::string("train.") + task + ".cnn", c,
                           [&](Stage& s) { cmd_train_cnn(s, task, ph); });
        }
        throw ts::ConfigError("--model must be lr or cnn, got '" + model + "'");
      };
    });
  }

  CLI::App* eval = app.add_subcommand("eval", "classifier evaluation");
  eval->require_subcommand(1);
  eval->add_subcommand("pr", "precision-recall curve from a score file")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("eval.pr", c, cmd_eval_pr);
        };
      });

  CLI::App* link = app.add_subcommand("link", "tweet/CVE linking");
  link->require_subcommand(1);
  link->add_subcommand("build", "build and filter the link table")->callback([&] {
    action = [](const PipelineConfig& c) {
      return run_stage("link.build", c, cmd_link_build);
    };
  });
  CLI::App* audit = link->add_subcommand("audit", "sample links for inspection");
  audit->add_option("--sample", sample, "number of links to print");
  audit->callback([&] {
    action = [&](const PipelineConfig& c) {
      cmd_link_audit(c, sample);
      return 0;
    };
  });

  CLI::App* forecast = app.add_subcommand("forecast", "CVE ranking and evaluation");
  forecast->require_subcommand(1);
  CLI::App* rank = forecast->add_subcommand("rank", "rank linked CVEs");
  rank->add_option("--scorer", scorer, "model, volume, true-cvss, or random");
  rank->callback([&] {
    action = [&](const PipelineConfig& c) {
      return run_stage("forecast.rank." + scorer, c,
                       [&](Stage& s) { cmd_forecast_rank(s, scorer); });
    };
  });
  CLI::App* feval = forecast->add_subcommand("eval", "evaluate a ranking");
  feval->add_option("--against", against, "cvss or exploits");
  feval->callback([&] {
    action = [&](const PipelineConfig& c) {
      return run_stage("forecast.eval." + against, c,
                       [&](Stage& s) { cmd_forecast_eval(s, against); });
    };
  });

  CLI::App* insights = app.add_subcommand("insights", "corpus analyses");
  insights->require_subcommand(1);
  insights->add_subcommand("adjectives", "log-odds lexicon ranking")->callback([&] {
    action = [](const PipelineConfig& c) {
      return run_stage("insights.adjectives", c, cmd_insights_adjectives);
    };
  });
  insights->add_subcommand("temporal", "publication delay statistics")
      ->callback([&] {
        action = [](const PipelineConfig& c) {
          return run_stage("insights.temporal", c, cmd_insights_temporal);
        };
      });
  insights->add_subcommand("accounts", "account reliability table")->callback([&] {
    action = [](const PipelineConfig& c) {
      return run_stage("insights.accounts", c, cmd_insights_accounts);
    };
  });

  // Let common options (-c, --set, -o) appear after any subcommand.
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* node) {
    for (CLI::App* sub : node->get_subcommands([](const CLI::App*) { return true; })) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    PipelineConfig config;
    if (!config_path.empty()) config = PipelineConfig::parse_file(config_path);
    for (const std::string& kv : overrides) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ts::ConfigError("--set expects section.key=value, got '" + kv + "'");
      }
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!output_dir.empty()) config.set("output.dir", output_dir);
    return action(config);
  } catch (const ts::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
