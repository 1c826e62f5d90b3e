// Copyright 2026 The fis Authors. All rights reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fis/data_model.hpp"

namespace fis {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;  // {0,1}
};

// Mann-Whitney AUC with midranks for ties. O(n log n); exact for inputs whose
// midrank sums are representable (integers and halves).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  const size_t n = scores.size();
  if (n != labels.size() || n == 0) {
    throw std::invalid_argument("auc: scores and labels must be equal-length and non-empty");
  }
  std::vector<int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int32_t a, int32_t b) { return scores[a] < scores[b]; });

  int64_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: both classes must be present");
  }

  // Sum of positive midranks. Tied blocks share rank (lo+hi)/2, 1-based.
  double pos_rank_sum = 0.0;
  size_t idx = 0;
  while (idx < n) {
    size_t end = idx;
    while (end + 1 < n && scores[order[end + 1]] == scores[order[idx]]) ++end;
    const double midrank = (static_cast<double>(idx + 1) + static_cast<double>(end + 1)) / 2.0;
    for (size_t k = idx; k <= end; ++k) {
      if (labels[order[k]] != 0) pos_rank_sum += midrank;
    }
    idx = end + 1;
  }
  const double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double auc(const ScoredSet& s) {
  return auc(std::span<const double>(s.scores), std::span<const int>(s.labels));
}

// Mean cross-entropy of probabilities clipped to [1e-7, 1 - 1e-7].
inline double logloss(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw std::invalid_argument("logloss: probs and labels must be equal-length and non-empty");
  }
  constexpr double kClip = 1e-7;
  double total = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kClip, 1.0 - kClip);
    total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

inline double logloss(const ScoredSet& s) {
  return logloss(std::span<const double>(s.scores), std::span<const int>(s.labels));
}

// Sample Pearson correlation.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size();
  if (n != b.size() || n < 2) {
    throw std::invalid_argument("pearson: need two equal-length vectors of size >= 2");
  }
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw std::invalid_argument("pearson: zero-variance input");
  }
  return sab / std::sqrt(saa * sbb);
}

// AUC of the predictor that scores a test row by the smoothed training CTR of
// its (value_i, value_j) combination: (clicks+1)/(impressions+2). Unseen
// combinations fall back to the global training CTR. One-hot fields only.
inline double statistics_auc(const Dataset& train, const Dataset& test,
                             const InteractionId& id) {
  if (id.order != Order::kPair) {
    throw std::invalid_argument("statistics_auc: pair interactions only");
  }
  if (train.schema.multi_hot[id.i] || train.schema.multi_hot[id.j]) {
    throw std::invalid_argument("statistics_auc: multi-hot fields are not supported");
  }

  std::map<std::pair<int32_t, int32_t>, std::pair<int64_t, int64_t>> counts;
  int64_t global_clicks = 0;
  for (const Instance& x : train.instances) {
    auto key = std::make_pair(x.indices[id.i][0], x.indices[id.j][0]);
    auto& [clicks, impressions] = counts[key];
    clicks += x.label;
    impressions += 1;
    global_clicks += x.label;
  }
  if (train.instances.empty()) {
    throw std::invalid_argument("statistics_auc: empty training data");
  }
  const double global_ctr =
      static_cast<double>(global_clicks) / static_cast<double>(train.instances.size());

  ScoredSet scored;
  scored.scores.reserve(test.instances.size());
  scored.labels.reserve(test.instances.size());
  for (const Instance& x : test.instances) {
    auto it = counts.find(std::make_pair(x.indices[id.i][0], x.indices[id.j][0]));
    double score = global_ctr;
    if (it != counts.end()) {
      score = (static_cast<double>(it->second.first) + 1.0) /
              (static_cast<double>(it->second.second) + 2.0);
    }
    scored.scores.push_back(score);
    scored.labels.push_back(x.label);
  }
  return auc(scored);
}

}  // namespace fis
