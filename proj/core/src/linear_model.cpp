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

#include "threatscope/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "threatscope/error.hpp"
#include "threatscope/metrics.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::linmodel {

namespace {

double dot(const LinearModel& model, const featurize::SparseVector& x) {
  double z = model.bias;
  for (const auto& [index, count] : x.entries) {
    if (index >= model.weights.size()) {
      throw ValidationError("feature index " + std::to_string(index) +
                            " outside weight vector of size " +
                            std::to_string(model.weights.size()));
    }
    z += model.weights[index] * static_cast<double>(count);
  }
  return z;
}

// log(1 + e^z) without overflow.
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void check_two_classes(std::span<const Example> examples) {
  bool has_positive = false;
  bool has_negative = false;
  for (const Example& e : examples) {
    (e.positive ? has_positive : has_negative) = true;
  }
  if (!has_positive || !has_negative) {
    throw ValidationError("training set must contain both classes");
  }
}

double dev_pr_auc(const LinearModel& model, std::span<const Example> dev_set) {
  std::vector<metrics::ScoredLabel> scored;
  scored.reserve(dev_set.size());
  for (std::size_t i = 0; i < dev_set.size(); ++i) {
    scored.push_back({predict(model, dev_set[i].features), dev_set[i].positive,
                      std::to_string(i)});
  }
  return metrics::pr_auc(scored);
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double predict(const LinearModel& model, const featurize::SparseVector& x) {
  return sigmoid(dot(model, x));
}

LossGradient loss_and_gradient(const LinearModel& model,
                               std::span<const Example> examples, double l2) {
  if (examples.empty()) throw ValidationError("loss over empty example set");
  LossGradient out;
  out.weight_grad.assign(model.weights.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (const Example& e : examples) {
    const double z = dot(model, e.features);
    const double y = e.positive ? 1.0 : 0.0;
    // BCE in logit form: softplus(z) - y*z.
    out.loss += (softplus(z) - y * z) * inv_n;
    const double delta = (sigmoid(z) - y) * inv_n;
    out.bias_grad += delta;
    for (const auto& [index, count] : e.features.entries) {
      out.weight_grad[index] += delta * static_cast<double>(count);
    }
  }
  double weight_norm_sq = 0.0;
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    weight_norm_sq += model.weights[j] * model.weights[j];
    out.weight_grad[j] += l2 * model.weights[j];
  }
  out.loss += 0.5 * l2 * weight_norm_sq;
  return out;
}

TrainResult train(std::span<const Example> train_set,
                  std::span<const Example> dev_set, std::size_t weight_count,
                  const TrainConfig& config) {
  if (train_set.empty()) throw ValidationError("empty training set");
  check_two_classes(train_set);
  TrainResult result;
  result.model.weights.assign(weight_count, 0.0);
  result.model.bias = 0.0;
  if (config.epochs == 0) return result;
  if (dev_set.empty()) throw ValidationError("empty dev set");

  LinearModel current = result.model;
  double best_auc = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const LossGradient lg = loss_and_gradient(current, train_set, config.l2);
    for (std::size_t j = 0; j < current.weights.size(); ++j) {
      current.weights[j] -= config.learning_rate * lg.weight_grad[j];
    }
    current.bias -= config.learning_rate * lg.bias_grad;
    const double loss_after =
        loss_and_gradient(current, train_set, config.l2).loss;
    result.train_loss.push_back(loss_after);
    const double auc = dev_pr_auc(current, dev_set);
    result.dev_auc.push_back(auc);
    // Ties go to the later epoch: equal ranking quality, better-calibrated
    // probabilities.
    if (auc >= best_auc) {
      best_auc = auc;
      result.model = current;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::vector<std::pair<std::string, double>> top_features(
    const LinearModel& model, const featurize::Vocabulary& vocab,
    std::size_t k) {
  if (model.weights.size() != vocab.size()) {
    throw ValidationError("model/vocabulary size mismatch");
  }
  std::vector<std::pair<std::string, double>> features;
  features.reserve(vocab.size());
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    features.emplace_back(vocab.token_at(i), model.weights[i]);
  }
  std::sort(features.begin(), features.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (features.size() > k) features.resize(k);
  return features;
}

void save_model(const std::filesystem::path& path, const LinearModel& model) {
  std::ostringstream out;
  out << model.weights.size() << ' ' << format_double(model.bias) << '\n';
  for (double w : model.weights) out << format_double(w) << '\n';
  write_file(path, out.str());
}

LinearModel load_model(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty model file");
  std::istringstream header(lines[0]);
  std::size_t size = 0;
  LinearModel model;
  if (!(header >> size >> model.bias)) {
    throw ParseError(path.string() + ": bad model header '" + lines[0] + "'");
  }
  if (lines.size() != size + 1) {
    throw ParseError(path.string() + ": expected " + std::to_string(size) +
                     " weights, found " + std::to_string(lines.size() - 1));
  }
  model.weights.reserve(size);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    model.weights.push_back(std::strtod(lines[i].c_str(), nullptr));
  }
  return model;
}

}  // namespace threatscope::linmodel
