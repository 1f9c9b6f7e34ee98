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

#include "threatscope/convnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "threatscope/error.hpp"
#include "threatscope/linear_model.hpp"
#include "threatscope/metrics.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian");

namespace threatscope::convnet {

namespace {

// Window positions that participate in pooling. With at least one full
// window of real tokens, windows stay inside the real prefix; shorter
// inputs fall back to the single leading window (which reads the zero pad
// row), keeping the output defined and pad-amount invariant.
std::size_t valid_positions(std::size_t true_len, std::size_t width) {
  return true_len >= width ? true_len - width + 1 : 1;
}

void check_indices(const ConvModel& model,
                   std::span<const std::uint32_t> indices,
                   std::size_t* true_len_out) {
  if (indices.size() < model.max_width()) {
    throw ValidationError("input of length " + std::to_string(indices.size()) +
                          " shorter than widest filter (" +
                          std::to_string(model.max_width()) + ")");
  }
  std::size_t true_len = indices.size();
  bool in_padding = false;
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= model.vocab_size) {
      throw ValidationError("token index " + std::to_string(indices[t]) +
                            " outside vocabulary");
    }
    if (indices[t] == model.pad_index) {
      if (!in_padding) {
        in_padding = true;
        true_len = t;
      }
    } else if (in_padding) {
      throw ValidationError("padding must be trailing");
    }
  }
  *true_len_out = true_len;
}

double bce_from_logit(double logit, bool positive) {
  // softplus(logit) - y*logit, overflow-safe.
  const double sp = logit > 0 ? logit + std::log1p(std::exp(-logit))
                              : std::log1p(std::exp(logit));
  return positive ? sp - logit : sp;
}

double mean_dev_auc(const ConvModel& model, std::span<const ConvExample> dev) {
  std::vector<metrics::ScoredLabel> scored;
  scored.reserve(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    scored.push_back({forward(model, dev[i].indices).probability,
                      dev[i].positive, std::to_string(i)});
  }
  return metrics::pr_auc(scored);
}

void append_u32(std::string& blob, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  blob.append(buf, 4);
}

void append_doubles(std::string& blob, std::span<const double> values) {
  const std::size_t off = blob.size();
  blob.resize(off + values.size() * 8);
  std::memcpy(blob.data() + off, values.data(), values.size() * 8);
}

class Reader {
 public:
  Reader(const std::string& blob, std::string path)
      : blob_(blob), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    std::memcpy(&v, blob_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  void doubles(std::span<double> out) {
    need(out.size() * 8);
    std::memcpy(out.data(), blob_.data() + pos_, out.size() * 8);
    pos_ += out.size() * 8;
  }

  void finish() const {
    if (pos_ != blob_.size()) {
      throw ParseError(path_ + ": trailing bytes in model file");
    }
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > blob_.size()) {
      throw ParseError(path_ + ": truncated model file");
    }
  }

  const std::string& blob_;
  std::string path_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[8] = {'T', 'S', 'C', 'N', 'N', '0', '0', '1'};

}  // namespace

std::size_t ConvModel::total_filters() const {
  std::size_t n = 0;
  for (const FilterBank& bank : banks) n += bank.filters;
  return n;
}

std::size_t ConvModel::max_width() const {
  std::size_t w = 0;
  for (const FilterBank& bank : banks) w = std::max(w, bank.width);
  return w;
}

ForwardCache forward(const ConvModel& model,
                     std::span<const std::uint32_t> indices) {
  ForwardCache cache;
  check_indices(model, indices, &cache.true_len);
  cache.indices.assign(indices.begin(), indices.end());
  const std::size_t d = model.embed_dim;
  cache.pooled.reserve(model.total_filters());
  for (const FilterBank& bank : model.banks) {
    ForwardCache::BankCache bc;
    bc.argmax.resize(bank.filters);
    bc.best_preact.resize(bank.filters);
    const std::size_t positions = valid_positions(cache.true_len, bank.width);
    for (std::size_t f = 0; f < bank.filters; ++f) {
      const double* w = bank.weights.data() + f * bank.width * d;
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_t = 0;
      for (std::size_t t = 0; t < positions; ++t) {
        double z = bank.biases[f];
        for (std::size_t r = 0; r < bank.width; ++r) {
          const double* row = model.embeddings.data() +
                              static_cast<std::size_t>(indices[t + r]) * d;
          const double* wr = w + r * d;
          for (std::size_t c = 0; c < d; ++c) z += wr[c] * row[c];
        }
        if (z > best) {
          best = z;
          best_t = t;
        }
      }
      bc.argmax[f] = best_t;
      bc.best_preact[f] = best;
      // max commutes with ReLU, so pooling pre-activations then clamping
      // equals pooling the ReLU outputs.
      cache.pooled.push_back(std::max(best, 0.0));
    }
    cache.banks.push_back(std::move(bc));
  }
  cache.logit = model.output_bias;
  for (std::size_t s = 0; s < cache.pooled.size(); ++s) {
    cache.logit += model.output_weights[s] * cache.pooled[s];
  }
  cache.probability = linmodel::sigmoid(cache.logit);
  return cache;
}

Gradients backward(const ConvModel& model, const ForwardCache& cache,
                   bool positive_label) {
  if (cache.banks.size() != model.banks.size() ||
      cache.pooled.size() != model.total_filters() ||
      cache.indices.size() < model.max_width()) {
    throw ValidationError("forward cache does not match model");
  }
  const std::size_t d = model.embed_dim;
  Gradients g;
  g.embeddings.assign(model.embeddings.size(), 0.0);
  g.output_weights.assign(model.output_weights.size(), 0.0);
  for (const FilterBank& bank : model.banks) {
    FilterBank bg;
    bg.width = bank.width;
    bg.filters = bank.filters;
    bg.weights.assign(bank.weights.size(), 0.0);
    bg.biases.assign(bank.biases.size(), 0.0);
    g.banks.push_back(std::move(bg));
  }

  const double delta = cache.probability - (positive_label ? 1.0 : 0.0);
  g.output_bias = delta;
  for (std::size_t s = 0; s < cache.pooled.size(); ++s) {
    g.output_weights[s] = delta * cache.pooled[s];
  }

  std::size_t slot = 0;
  for (std::size_t b = 0; b < model.banks.size(); ++b) {
    const FilterBank& bank = model.banks[b];
    const ForwardCache::BankCache& bc = cache.banks[b];
    if (bc.argmax.size() != bank.filters) {
      throw ValidationError("forward cache does not match model");
    }
    for (std::size_t f = 0; f < bank.filters; ++f, ++slot) {
      // ReLU gate: gradient flows only through a positive pooled maximum.
      if (bc.best_preact[f] <= 0.0) continue;
      const double dz = delta * model.output_weights[slot];
      if (dz == 0.0) continue;
      const std::size_t t = bc.argmax[f];
      const double* w = bank.weights.data() + f * bank.width * d;
      double* wg = g.banks[b].weights.data() + f * bank.width * d;
      g.banks[b].biases[f] += dz;
      for (std::size_t r = 0; r < bank.width; ++r) {
        const std::uint32_t token = cache.indices[t + r];
        const double* row =
            model.embeddings.data() + static_cast<std::size_t>(token) * d;
        double* grow = g.embeddings.data() + static_cast<std::size_t>(token) * d;
        const bool is_pad = token == model.pad_index;
        for (std::size_t c = 0; c < d; ++c) {
          wg[r * d + c] += dz * row[c];
          if (!is_pad) grow[c] += dz * w[r * d + c];
        }
      }
    }
  }
  return g;
}

double example_loss(const ConvModel& model,
                    std::span<const std::uint32_t> indices,
                    bool positive_label) {
  return bce_from_logit(forward(model, indices).logit, positive_label);
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw ValidationError("parameter/gradient shape mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) {
    throw ValidationError("Adam state does not match parameter shape");
  }
  ++state.timestep;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.timestep));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.timestep));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

ConvModel initialize_model(
    const featurize::Vocabulary& word_vocab,
    const std::unordered_map<std::string, std::vector<double>>& pretrained,
    const ConvTrainConfig& config) {
  if (config.widths.empty() || config.filters_per_width == 0) {
    throw ValidationError("model needs at least one filter");
  }
  const std::size_t max_width =
      *std::max_element(config.widths.begin(), config.widths.end());
  if (config.max_len < max_width) {
    throw ValidationError("max_len shorter than widest filter");
  }
  ConvModel model;
  model.vocab_size = word_vocab.size();
  model.embed_dim = config.embed_dim;
  model.max_len = config.max_len;
  model.pad_index = word_vocab.pad_index();

  Rng rng(config.seed);
  model.embeddings.resize(model.vocab_size * model.embed_dim);
  for (std::uint32_t i = 0; i < model.vocab_size; ++i) {
    double* row = model.embeddings.data() + static_cast<std::size_t>(i) * model.embed_dim;
    const auto it = pretrained.find(word_vocab.token_at(i));
    if (it != pretrained.end()) {
      if (it->second.size() != model.embed_dim) {
        throw ValidationError("pretrained vector for '" + word_vocab.token_at(i) +
                              "' has dimension " + std::to_string(it->second.size()) +
                              ", expected " + std::to_string(model.embed_dim));
      }
      std::copy(it->second.begin(), it->second.end(), row);
    } else {
      for (std::size_t c = 0; c < model.embed_dim; ++c) {
        row[c] = uniform_real(rng, -config.oov_init_scale, config.oov_init_scale);
      }
    }
  }
  std::fill_n(model.embeddings.data() +
                  static_cast<std::size_t>(model.pad_index) * model.embed_dim,
              model.embed_dim, 0.0);

  for (std::size_t width : config.widths) {
    FilterBank bank;
    bank.width = width;
    bank.filters = config.filters_per_width;
    bank.weights.resize(bank.filters * width * model.embed_dim);
    for (double& w : bank.weights) {
      w = uniform_real(rng, -config.filter_init_scale, config.filter_init_scale);
    }
    bank.biases.assign(bank.filters, 0.0);
    model.banks.push_back(std::move(bank));
  }
  model.output_weights.assign(model.total_filters(), 0.0);
  model.output_bias = 0.0;
  return model;
}

ConvTrainResult train_cnn(
    std::span<const ConvExample> train_set, std::span<const ConvExample> dev_set,
    const featurize::Vocabulary& word_vocab,
    const std::unordered_map<std::string, std::vector<double>>& pretrained,
    const ConvTrainConfig& config) {
  if (train_set.empty()) throw ValidationError("empty training set");
  bool has_positive = false;
  bool has_negative = false;
  for (const ConvExample& e : train_set) {
    (e.positive ? has_positive : has_negative) = true;
  }
  if (!has_positive || !has_negative) {
    throw ValidationError("training set must contain both classes");
  }

  ConvTrainResult result;
  result.model = initialize_model(word_vocab, pretrained, config);
  if (config.epochs == 0) return result;
  if (dev_set.empty()) throw ValidationError("empty dev set");

  ConvModel current = result.model;
  AdamState embed_state;
  std::vector<AdamState> weight_states(current.banks.size());
  std::vector<AdamState> bias_states(current.banks.size());
  AdamState out_weight_state;
  AdamState out_bias_state;

  Rng rng(config.seed + 1);  // distinct stream from initialization
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  double best_auc = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t i : order) {
      const ConvExample& example = train_set[i];
      const ForwardCache cache = forward(current, example.indices);
      loss_sum += bce_from_logit(cache.logit, example.positive);
      const Gradients grads = backward(current, cache, example.positive);
      adam_step(current.embeddings, grads.embeddings, embed_state, config.adam);
      for (std::size_t b = 0; b < current.banks.size(); ++b) {
        adam_step(current.banks[b].weights, grads.banks[b].weights,
                  weight_states[b], config.adam);
        adam_step(current.banks[b].biases, grads.banks[b].biases,
                  bias_states[b], config.adam);
      }
      adam_step(current.output_weights, grads.output_weights, out_weight_state,
                config.adam);
      adam_step(std::span<double>(&current.output_bias, 1),
                std::span<const double>(&grads.output_bias, 1), out_bias_state,
                config.adam);
      // The pad row stays pinned: its gradient is zero by contract and
      // Adam with zero moments leaves it untouched.
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(train_set.size()));
    const double auc = mean_dev_auc(current, dev_set);
    result.dev_auc.push_back(auc);
    // Ties go to the later epoch, matching the linear model's selection.
    if (auc >= best_auc) {
      best_auc = auc;
      result.model = current;
      result.best_epoch = epoch;
    }
  }
  return result;
}

void save_model(const std::filesystem::path& path, const ConvModel& model) {
  std::string blob(kMagic, sizeof(kMagic));
  append_u32(blob, static_cast<std::uint32_t>(model.vocab_size));
  append_u32(blob, static_cast<std::uint32_t>(model.embed_dim));
  append_u32(blob, static_cast<std::uint32_t>(model.max_len));
  append_u32(blob, model.pad_index);
  append_u32(blob, static_cast<std::uint32_t>(model.banks.size()));
  for (const FilterBank& bank : model.banks) {
    append_u32(blob, static_cast<std::uint32_t>(bank.width));
    append_u32(blob, static_cast<std::uint32_t>(bank.filters));
  }
  append_doubles(blob, model.embeddings);
  for (const FilterBank& bank : model.banks) {
    append_doubles(blob, bank.weights);
    append_doubles(blob, bank.biases);
  }
  append_doubles(blob, model.output_weights);
  append_doubles(blob, std::span<const double>(&model.output_bias, 1));
  write_file(path, blob);
}

ConvModel load_model(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < sizeof(kMagic) ||
      std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a model file");
  }
  Reader reader(blob, path.string());
  reader.u32();  // skip magic (first 4 bytes already checked)
  reader.u32();
  ConvModel model;
  model.vocab_size = reader.u32();
  model.embed_dim = reader.u32();
  model.max_len = reader.u32();
  model.pad_index = reader.u32();
  const std::uint32_t bank_count = reader.u32();
  for (std::uint32_t b = 0; b < bank_count; ++b) {
    FilterBank bank;
    bank.width = reader.u32();
    bank.filters = reader.u32();
    model.banks.push_back(std::move(bank));
  }
  model.embeddings.resize(model.vocab_size * model.embed_dim);
  reader.doubles(model.embeddings);
  for (FilterBank& bank : model.banks) {
    bank.weights.resize(bank.filters * bank.width * model.embed_dim);
    bank.biases.resize(bank.filters);
    reader.doubles(bank.weights);
    reader.doubles(bank.biases);
  }
  model.output_weights.resize(model.total_filters());
  reader.doubles(model.output_weights);
  reader.doubles(std::span<double>(&model.output_bias, 1));
  reader.finish();
  return model;
}

}  // namespace threatscope::convnet
