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
// Binary logistic regression over sparse bag-of-ngram vectors. Backs both
// the threat-existence classifier and the severity baseline.

#ifndef THREATSCOPE_LINEAR_MODEL_HPP_
#define THREATSCOPE_LINEAR_MODEL_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "threatscope/featurize.hpp"

namespace threatscope::linmodel {

struct LinearModel {
  std::vector<double> weights;  // length = vocabulary size
  double bias = 0.0;
};

struct Example {
  featurize::SparseVector features;
  bool positive = false;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 300;
  double l2 = 1e-4;
};

struct TrainResult {
  LinearModel model;             // parameters from the best dev epoch
  std::vector<double> train_loss;  // per epoch, after the update
  std::vector<double> dev_auc;     // per epoch
  std::size_t best_epoch = 0;      // 1-based; 0 when epochs == 0
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> weight_grad;
  double bias_grad = 0.0;
};

// Overflow-safe logistic function.
double sigmoid(double z);

// sigmoid(w.x + b). Throws ValidationError on an index outside the weight
// vector.
double predict(const LinearModel& model, const featurize::SparseVector& x);

// Mean binary cross-entropy plus (l2/2)*|w|^2, with its exact gradient.
// The bias is not regularized.
LossGradient loss_and_gradient(const LinearModel& model,
                               std::span<const Example> examples, double l2);

// Full-batch gradient descent from zero initialization; returns the
// parameters of the epoch with the best dev PR-AUC. Requires both classes
// in the training set and, when epochs > 0, at least one dev positive.
TrainResult train(std::span<const Example> train_set,
                  std::span<const Example> dev_set, std::size_t weight_count,
                  const TrainConfig& config);

// Top-k features by descending signed weight, ties lexicographic.
std::vector<std::pair<std::string, double>> top_features(
    const LinearModel& model, const featurize::Vocabulary& vocab, std::size_t k);

// Text model file: "vocab_size bias" header line, one weight per line.
void save_model(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace threatscope::linmodel

#endif  // THREATSCOPE_LINEAR_MODEL_HPP_
