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

#include "threatscope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "threatscope/error.hpp"
#include "threatscope/rng.hpp"
#include "threatscope/text_util.hpp"

namespace threatscope::metrics {

namespace {

std::size_t count_positives(std::span<const ScoredLabel> items) {
  std::size_t p = 0;
  for (const ScoredLabel& item : items) {
    if (item.positive) ++p;
  }
  return p;
}

void check_finite(std::span<const ScoredLabel> items) {
  for (const ScoredLabel& item : items) {
    if (!std::isfinite(item.score)) {
      throw ValidationError("non-finite score for item '" + item.id + "'");
    }
  }
}

std::vector<ScoredLabel> ranked(std::span<const ScoredLabel> items) {
  std::vector<ScoredLabel> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
  return sorted;
}

std::size_t positives_in_top_k(std::span<const ScoredLabel> items,
                               std::size_t k) {
  if (k < 1 || k > items.size()) {
    throw ValidationError("k = " + std::to_string(k) +
                          " out of range for pool of " +
                          std::to_string(items.size()));
  }
  const std::vector<ScoredLabel> sorted = ranked(items);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (sorted[i].positive) ++tp;
  }
  return tp;
}

}  // namespace

PRCurve pr_curve(std::span<const ScoredLabel> items) {
  check_finite(items);
  const std::size_t total_positives = count_positives(items);
  if (total_positives == 0) {
    throw ValidationError("precision-recall curve needs at least one positive item");
  }
  std::vector<ScoredLabel> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) {
              return a.score > b.score;
            });
  PRCurve curve;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double threshold = sorted[i].score;
    // Everything tied at this score enters the ranking together.
    while (i < sorted.size() && sorted[i].score == threshold) {
      if (sorted[i].positive) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    PrPoint point;
    point.threshold = threshold;
    point.recall = static_cast<double>(tp) / static_cast<double>(total_positives);
    point.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.points.push_back(point);
  }
  return curve;
}

double pr_auc(const PRCurve& curve) {
  double auc = 0.0;
  double prev_recall = 0.0;
  for (const PrPoint& point : curve.points) {
    auc += (point.recall - prev_recall) * point.precision;
    prev_recall = point.recall;
  }
  return auc;
}

double pr_auc(std::span<const ScoredLabel> items) {
  return pr_auc(pr_curve(items));
}

double precision_at_k(std::span<const ScoredLabel> items, std::size_t k) {
  check_finite(items);
  return static_cast<double>(positives_in_top_k(items, k)) /
         static_cast<double>(k);
}

double recall_at_k(std::span<const ScoredLabel> items, std::size_t k) {
  check_finite(items);
  const std::size_t total_positives = count_positives(items);
  if (total_positives == 0) {
    throw ValidationError("recall@k undefined without positive items");
  }
  return static_cast<double>(positives_in_top_k(items, k)) /
         static_cast<double>(total_positives);
}

double random_baseline(std::span<const ScoredLabel> items, std::size_t k,
                       std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("random baseline needs trials >= 1");
  if (k < 1 || k > items.size()) {
    throw ValidationError("k = " + std::to_string(k) +
                          " out of range for pool of " +
                          std::to_string(items.size()));
  }
  std::vector<char> labels;
  labels.reserve(items.size());
  for (const ScoredLabel& item : items) labels.push_back(item.positive ? 1 : 0);
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    shuffle(labels, rng);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) tp += labels[i];
    sum += static_cast<double>(tp) / static_cast<double>(k);
  }
  return sum / static_cast<double>(trials);
}

void write_curve_csv(const std::filesystem::path& path, const PRCurve& curve) {
  std::ostringstream out;
  out << "threshold,recall,precision\n";
  for (const PrPoint& p : curve.points) {
    out << format_double(p.threshold) << ',' << format_double(p.recall) << ','
        << format_double(p.precision) << '\n';
  }
  write_file(path, out.str());
}

void write_summary_json(const std::filesystem::path& path,
                        std::span<const ScoredLabel> items) {
  nlohmann::json j;
  j["auc"] = pr_auc(items);
  nlohmann::json p_at;
  for (std::size_t k : {10u, 50u, 100u}) {
    if (k <= items.size()) {
      p_at[std::to_string(k)] = precision_at_k(items, k);
    }
  }
  j["p_at"] = p_at;
  j["positives"] = count_positives(items);
  j["total"] = items.size();
  write_file(path, j.dump(2) + "\n");
}

}  // namespace threatscope::metrics
