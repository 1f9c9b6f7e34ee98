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
// Precision-recall curves, average-precision AUC, and top-k metrics.

#ifndef THREATSCOPE_METRICS_HPP_
#define THREATSCOPE_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace threatscope::metrics {

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
  std::string id;
};

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PrPoint> points;  // recall non-decreasing
};

// One point per distinct score threshold, scores descending; items tied at
// a threshold enter together. Throws ValidationError when no item is
// positive (recall undefined).
PRCurve pr_curve(std::span<const ScoredLabel> items);

// Average-precision (step interpolation): sum over curve points of
// (recall delta) x precision.
double pr_auc(const PRCurve& curve);
double pr_auc(std::span<const ScoredLabel> items);

// Top-k metrics under the deterministic tie rule (score desc, id asc).
// k must be in [1, items.size()].
double precision_at_k(std::span<const ScoredLabel> items, std::size_t k);
// recall_at_k additionally requires at least one positive item.
double recall_at_k(std::span<const ScoredLabel> items, std::size_t k);

// Mean P@k over `trials` uniform shuffles of the item pool.
double random_baseline(std::span<const ScoredLabel> items, std::size_t k,
                       std::size_t trials, std::uint64_t seed);

// CSV "threshold,recall,precision".
void write_curve_csv(const std::filesystem::path& path, const PRCurve& curve);

// JSON {"auc": ..., "p_at": {"10": ...}} restricted to k <= pool size.
void write_summary_json(const std::filesystem::path& path,
                        std::span<const ScoredLabel> items);

}  // namespace threatscope::metrics

#endif  // THREATSCOPE_METRICS_HPP_
