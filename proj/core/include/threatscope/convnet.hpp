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
// 1D convolutional text classifier with hand-derived gradients: embedding
// lookup, per-width valid convolutions, ReLU, masked max-over-time pooling,
// and a sigmoid output head, trained with Adam at batch size 1.

#ifndef THREATSCOPE_CONVNET_HPP_
#define THREATSCOPE_CONVNET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "threatscope/featurize.hpp"

namespace threatscope::convnet {

struct FilterBank {
  std::size_t width = 0;
  std::size_t filters = 0;
  // [filter][row][column]: filters x width x embed_dim.
  std::vector<double> weights;
  std::vector<double> biases;  // one per filter
};

struct ConvModel {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t max_len = 0;
  std::uint32_t pad_index = 0;
  std::vector<double> embeddings;  // vocab x embed_dim; pad row pinned at 0
  std::vector<FilterBank> banks;
  std::vector<double> output_weights;  // one per pooled feature
  double output_bias = 0.0;

  std::size_t total_filters() const;
  std::size_t max_width() const;
};

// Activations needed by backward: the winning window and its
// pre-activation per filter.
struct ForwardCache {
  std::vector<std::uint32_t> indices;
  std::size_t true_len = 0;
  struct BankCache {
    std::vector<std::size_t> argmax;
    std::vector<double> best_preact;
  };
  std::vector<BankCache> banks;
  std::vector<double> pooled;
  double logit = 0.0;
  double probability = 0.0;
};

struct Gradients {
  std::vector<double> embeddings;  // dense vocab x embed_dim
  std::vector<FilterBank> banks;   // same shapes as the model's
  std::vector<double> output_weights;
  double output_bias = 0.0;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t timestep = 0;
};

struct ConvTrainConfig {
  std::size_t embed_dim = 50;
  std::vector<std::size_t> widths = {3, 4, 5};
  std::size_t filters_per_width = 100;
  std::size_t max_len = 64;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
  AdamConfig adam;
  double filter_init_scale = 0.05;
  double oov_init_scale = 0.01;
};

struct ConvExample {
  std::vector<std::uint32_t> indices;  // right-padded, see featurize
  bool positive = false;
};

struct ConvTrainResult {
  ConvModel model;                 // parameters from the best dev epoch
  std::vector<double> epoch_loss;  // mean training BCE per epoch
  std::vector<double> dev_auc;     // per epoch
  std::size_t best_epoch = 0;      // 1-based; 0 when epochs == 0
};

// Runs the network on a right-padded index sequence. The sequence may be
// any length >= the widest filter; windows never mix real tokens with
// padding once at least one full window of real tokens exists, so output
// does not depend on the amount of trailing padding.
ForwardCache forward(const ConvModel& model,
                     std::span<const std::uint32_t> indices);

// Exact binary cross-entropy gradients for every parameter. The pad
// embedding row always receives zero gradient.
Gradients backward(const ConvModel& model, const ForwardCache& cache,
                   bool positive_label);

// BCE of a single example; the quantity backward differentiates.
double example_loss(const ConvModel& model,
                    std::span<const std::uint32_t> indices, bool positive_label);

// Bias-corrected Adam update on one parameter tensor. A zero-initialized
// state with zero gradients leaves parameters unchanged.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config);

// Fresh model: embedding rows copied from `pretrained` where the token is
// present (dimension must match), otherwise uniform in +-oov_init_scale;
// the pad row is zeroed. Filters uniform in +-filter_init_scale, output
// layer zero.
ConvModel initialize_model(
    const featurize::Vocabulary& word_vocab,
    const std::unordered_map<std::string, std::vector<double>>& pretrained,
    const ConvTrainConfig& config);

// Batch-1 Adam training with a per-epoch deterministic shuffle; returns the
// model of the epoch with the best dev PR-AUC. epochs == 0 returns the
// initialization untouched.
ConvTrainResult train_cnn(
    std::span<const ConvExample> train_set, std::span<const ConvExample> dev_set,
    const featurize::Vocabulary& word_vocab,
    const std::unordered_map<std::string, std::vector<double>>& pretrained,
    const ConvTrainConfig& config);

// Self-describing little-endian binary: dimension header then parameter
// blocks in declaration order.
void save_model(const std::filesystem::path& path, const ConvModel& model);
ConvModel load_model(const std::filesystem::path& path);

}  // namespace threatscope::convnet

#endif  // THREATSCOPE_CONVNET_HPP_
