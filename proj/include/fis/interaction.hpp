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

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/embedding.hpp"
#include "fis/rng.hpp"

namespace fis {

enum class InterMode { kPlain, kSearch, kRetrain };

inline const char* inter_mode_name(InterMode m) {
  switch (m) {
    case InterMode::kPlain: return "plain";
    case InterMode::kSearch: return "search";
    case InterMode::kRetrain: return "retrain";
  }
  return "?";
}

// One learnable weight per interaction, indexed canonically.
struct ArchitectureParams {
  std::vector<double> pair_alpha;
  std::vector<double> triple_alpha;

  void init(int m, bool with_triples, double value) {
    pair_alpha.assign(pair_count(m), value);
    triple_alpha.assign(with_triples ? triple_count(m) : 0, value);
  }
};

struct GateSet {
  std::vector<uint8_t> pair_open;
  std::vector<uint8_t> triple_open;

  void all_open(int m, bool with_triples) {
    pair_open.assign(pair_count(m), 1);
    triple_open.assign(with_triples ? triple_count(m) : 0, 1);
  }

  int64_t open_pairs() const {
    int64_t n = 0;
    for (uint8_t g : pair_open) n += g;
    return n;
  }
  int64_t open_triples() const {
    int64_t n = 0;
    for (uint8_t g : triple_open) n += g;
    return n;
  }
};

// gate = (alpha != 0), exact comparison: the search optimizer produces exact
// zeros by soft-thresholding, so no epsilon is wanted here.
inline GateSet extract_gates(const ArchitectureParams& alpha) {
  GateSet g;
  g.pair_open.reserve(alpha.pair_alpha.size());
  for (double a : alpha.pair_alpha) g.pair_open.push_back(a != 0.0 ? 1 : 0);
  g.triple_open.reserve(alpha.triple_alpha.size());
  for (double a : alpha.triple_alpha) g.triple_open.push_back(a != 0.0 ? 1 : 0);
  return g;
}

// Per-column running statistics, scale fixed at 1 and shift at 0.
struct BnState {
  double momentum = 0.99;
  double eps = 1e-5;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  void init(size_t columns, double mom = 0.99, double epsilon = 1e-5) {
    momentum = mom;
    eps = epsilon;
    running_mean.assign(columns, 0.0);
    running_var.assign(columns, 1.0);
  }
};

// Batch statistics cached by the training-mode forward pass.
struct BnCache {
  double mean = 0.0;
  double invstd = 0.0;
};

// TRAIN: normalize by batch mean and biased (1/B) variance, update running
// stats. Writes xhat over x in place and returns the cache.
inline BnCache bn_forward_train(std::span<double> x, BnState& state, size_t column) {
  const size_t B = x.size();
  if (B < 2) throw std::invalid_argument("bn: training batch must have >= 2 rows");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(B);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(B);
  const double invstd = 1.0 / std::sqrt(var + state.eps);
  for (double& v : x) v = (v - mean) * invstd;
  state.running_mean[column] =
      state.momentum * state.running_mean[column] + (1.0 - state.momentum) * mean;
  state.running_var[column] =
      state.momentum * state.running_var[column] + (1.0 - state.momentum) * var;
  return {mean, invstd};
}

inline void bn_forward_eval(std::span<double> x, const BnState& state, size_t column) {
  const double mean = state.running_mean[column];
  const double invstd = 1.0 / std::sqrt(state.running_var[column] + state.eps);
  for (double& v : x) v = (v - mean) * invstd;
}

// Full backward through the batch statistics:
//   dx_b = invstd * (g_b - mean(g) - xhat_b * mean(g ⊙ xhat))
inline void bn_backward(std::span<const double> xhat, std::span<const double> g,
                        const BnCache& cache, std::span<double> dx) {
  const size_t B = xhat.size();
  double g_mean = 0.0;
  double gx_mean = 0.0;
  for (size_t b = 0; b < B; ++b) {
    g_mean += g[b];
    gx_mean += g[b] * xhat[b];
  }
  g_mean /= static_cast<double>(B);
  gx_mean /= static_cast<double>(B);
  for (size_t b = 0; b < B; ++b) {
    dx[b] = cache.invstd * (g[b] - g_mean - xhat[b] * gx_mean);
  }
}

// <e_i, e_j> for one instance.
inline double pair_product(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// sum_k e_i[k] * e_j[k] * e_t[k], the symmetric trilinear form.
inline double triple_product(std::span<const double> a, std::span<const double> b,
                             std::span<const double> c) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k] * c[k];
  return s;
}

// B x C matrix of pairwise inner products over all canonical columns.
inline std::vector<double> pairwise_products(const BatchEmbed& E) {
  const auto ids = enumerate_interactions(E.m, Order::kPair);
  std::vector<double> out(ids.size() * E.B);
  for (size_t c = 0; c < ids.size(); ++c) {
    for (int b = 0; b < E.B; ++b) {
      out[c * E.B + b] = pair_product(E.at(b, ids[c].i), E.at(b, ids[c].j));
    }
  }
  return out;
}

inline std::vector<double> triple_products(const BatchEmbed& E) {
  const auto ids = enumerate_interactions(E.m, Order::kTriple);
  std::vector<double> out(ids.size() * E.B);
  for (size_t c = 0; c < ids.size(); ++c) {
    for (int b = 0; b < E.B; ++b) {
      out[c * E.B + b] = triple_product(E.at(b, ids[c].i), E.at(b, ids[c].j),
                                        E.at(b, ids[c].t));
    }
  }
  return out;
}

// Interaction layer configuration shared by forward and backward.
struct InterSettings {
  InterMode mode = InterMode::kPlain;
  bool use_triples = false;
  bool bn = true;              // normalize product columns in SEARCH/RETRAIN
  bool bn_eval_batch = false;  // EVAL falls back to batch statistics
};

// Forward caches. Columns are stored column-major (col * B + b); only active
// columns are materialized: all of them in PLAIN/SEARCH, open gates in RETRAIN.
struct InterForward {
  int B = 0;
  bool train = false;
  bool bn_applied = false;

  std::vector<int> pair_cols;
  std::vector<int> triple_cols;
  std::vector<double> pair_xhat;  // normalized (or raw when BN is off) products
  std::vector<double> triple_xhat;
  std::vector<BnCache> pair_bn;
  std::vector<BnCache> triple_bn;

  std::vector<double> l_inter;  // per instance: sum of weighted columns

  size_t pair_col_count() const { return pair_cols.size(); }
  size_t triple_col_count() const { return triple_cols.size(); }

  std::span<const double> pair_col(size_t k) const {
    return {pair_xhat.data() + k * B, static_cast<size_t>(B)};
  }
  std::span<const double> triple_col(size_t k) const {
    return {triple_xhat.data() + k * B, static_cast<size_t>(B)};
  }
};

namespace detail {

inline void check_layer_args(const InterSettings& s, int m,
                             const ArchitectureParams* alpha, const GateSet* gates) {
  if (s.mode != InterMode::kPlain) {
    if (alpha == nullptr) throw std::invalid_argument("interaction: mode needs alpha");
    if (static_cast<int64_t>(alpha->pair_alpha.size()) != pair_count(m)) {
      throw std::invalid_argument("interaction: alpha length mismatch");
    }
    if (s.use_triples &&
        static_cast<int64_t>(alpha->triple_alpha.size()) != triple_count(m)) {
      throw std::invalid_argument("interaction: triple alpha length mismatch");
    }
  }
  if (s.mode == InterMode::kRetrain) {
    if (gates == nullptr) throw std::invalid_argument("interaction: retrain needs gates");
    if (gates->pair_open.size() != alpha->pair_alpha.size() ||
        (s.use_triples && gates->triple_open.size() != alpha->triple_alpha.size())) {
      throw std::invalid_argument("interaction: gate length mismatch");
    }
  }
}

}  // namespace detail

// Forward pass of the interaction value columns (everything except the linear
// term, which the model head adds separately). In SEARCH and RETRAIN each
// active product column is normalized (when bn is on) then weighted by its
// alpha; PLAIN sums raw products with weight 1. Closed gates never appear.
inline InterForward interaction_forward(const BatchEmbed& E, const InterSettings& s,
                                        const ArchitectureParams* alpha,
                                        const GateSet* gates, BnState* bn_pairs,
                                        BnState* bn_triples, bool train) {
  detail::check_layer_args(s, E.m, alpha, gates);
  const bool apply_bn = s.bn && s.mode != InterMode::kPlain;
  if (apply_bn && (bn_pairs == nullptr || (s.use_triples && bn_triples == nullptr))) {
    throw std::invalid_argument("interaction: bn enabled but state missing");
  }

  InterForward f;
  f.B = E.B;
  f.train = train;
  f.bn_applied = apply_bn;
  f.l_inter.assign(E.B, 0.0);

  const auto pair_ids = enumerate_interactions(E.m, Order::kPair);
  for (size_t c = 0; c < pair_ids.size(); ++c) {
    if (s.mode == InterMode::kRetrain && !gates->pair_open[c]) continue;
    f.pair_cols.push_back(static_cast<int>(c));
  }
  if (s.use_triples) {
    const auto triple_ids = enumerate_interactions(E.m, Order::kTriple);
    for (size_t c = 0; c < triple_ids.size(); ++c) {
      if (s.mode == InterMode::kRetrain && !gates->triple_open[c]) continue;
      f.triple_cols.push_back(static_cast<int>(c));
    }
  }

  f.pair_xhat.resize(f.pair_cols.size() * E.B);
  f.pair_bn.resize(f.pair_cols.size());
  for (size_t k = 0; k < f.pair_cols.size(); ++k) {
    const InteractionId id = pair_ids[f.pair_cols[k]];
    std::span<double> col{f.pair_xhat.data() + k * E.B, static_cast<size_t>(E.B)};
    for (int b = 0; b < E.B; ++b) col[b] = pair_product(E.at(b, id.i), E.at(b, id.j));
    if (apply_bn) {
      if (train) {
        f.pair_bn[k] = bn_forward_train(col, *bn_pairs, f.pair_cols[k]);
      } else if (s.bn_eval_batch) {
        BnState scratch = *bn_pairs;
        f.pair_bn[k] = bn_forward_train(col, scratch, f.pair_cols[k]);
      } else {
        bn_forward_eval(col, *bn_pairs, f.pair_cols[k]);
      }
    }
    const double w = s.mode == InterMode::kPlain ? 1.0 : alpha->pair_alpha[f.pair_cols[k]];
    for (int b = 0; b < E.B; ++b) f.l_inter[b] += w * col[b];
  }

  if (s.use_triples) {
    const auto triple_ids = enumerate_interactions(E.m, Order::kTriple);
    f.triple_xhat.resize(f.triple_cols.size() * E.B);
    f.triple_bn.resize(f.triple_cols.size());
    for (size_t k = 0; k < f.triple_cols.size(); ++k) {
      const InteractionId id = triple_ids[f.triple_cols[k]];
      std::span<double> col{f.triple_xhat.data() + k * E.B, static_cast<size_t>(E.B)};
      for (int b = 0; b < E.B; ++b) {
        col[b] = triple_product(E.at(b, id.i), E.at(b, id.j), E.at(b, id.t));
      }
      if (apply_bn) {
        if (train) {
          f.triple_bn[k] = bn_forward_train(col, *bn_triples, f.triple_cols[k]);
        } else if (s.bn_eval_batch) {
          BnState scratch = *bn_triples;
          f.triple_bn[k] = bn_forward_train(col, scratch, f.triple_cols[k]);
        } else {
          bn_forward_eval(col, *bn_triples, f.triple_cols[k]);
        }
      }
      const double w =
          s.mode == InterMode::kPlain ? 1.0 : alpha->triple_alpha[f.triple_cols[k]];
      for (int b = 0; b < E.B; ++b) f.l_inter[b] += w * col[b];
    }
  }
  return f;
}

// Gradients produced by the interaction backward pass. Alpha gradients are
// sized over the full canonical index space; closed-gate entries stay exactly
// zero because their columns are never visited.
struct InterGrads {
  std::vector<double> pair_alpha;
  std::vector<double> triple_alpha;
};

// dcol_pair/dcol_triple hold dL/d(weighted column value), laid out like the
// forward caches (active column major). dE accumulates dL/dE in BatchEmbed
// layout. Alpha gradients are emitted for SEARCH and RETRAIN.
inline void interaction_backward(const BatchEmbed& E, const InterSettings& s,
                                 const ArchitectureParams* alpha, const GateSet* gates,
                                 const InterForward& f,
                                 std::span<const double> dcol_pair,
                                 std::span<const double> dcol_triple,
                                 std::vector<double>& dE, InterGrads* agrads) {
  detail::check_layer_args(s, E.m, alpha, gates);
  if (!f.train) throw std::logic_error("interaction backward: forward was not in train mode");
  if (agrads != nullptr) {
    agrads->pair_alpha.assign(pair_count(E.m), 0.0);
    agrads->triple_alpha.assign(s.use_triples ? triple_count(E.m) : 0, 0.0);
  }

  const auto pair_ids = enumerate_interactions(E.m, Order::kPair);
  std::vector<double> draw(E.B);
  for (size_t k = 0; k < f.pair_cols.size(); ++k) {
    const int c = f.pair_cols[k];
    const InteractionId id = pair_ids[c];
    std::span<const double> xhat = f.pair_col(k);
    std::span<const double> g = dcol_pair.subspan(k * E.B, E.B);
    const double w = s.mode == InterMode::kPlain ? 1.0 : alpha->pair_alpha[c];

    if (agrads != nullptr && s.mode != InterMode::kPlain) {
      double da = 0.0;
      for (int b = 0; b < E.B; ++b) da += g[b] * xhat[b];
      agrads->pair_alpha[c] = da;
    }
    // dL/dxhat = w * g; then through BN (if applied) to the raw product.
    std::vector<double> dxhat(E.B);
    for (int b = 0; b < E.B; ++b) dxhat[b] = w * g[b];
    if (f.bn_applied) {
      bn_backward(xhat, dxhat, f.pair_bn[k], draw);
    } else {
      std::copy(dxhat.begin(), dxhat.end(), draw.begin());
    }
    for (int b = 0; b < E.B; ++b) {
      std::span<const double> ei = E.at(b, id.i);
      std::span<const double> ej = E.at(b, id.j);
      double* dei = dE.data() + (static_cast<size_t>(b) * E.m + id.i) * E.d;
      double* dej = dE.data() + (static_cast<size_t>(b) * E.m + id.j) * E.d;
      const double dr = draw[b];
      for (int kk = 0; kk < E.d; ++kk) {
        dei[kk] += dr * ej[kk];
        dej[kk] += dr * ei[kk];
      }
    }
  }

  if (s.use_triples) {
    const auto triple_ids = enumerate_interactions(E.m, Order::kTriple);
    for (size_t k = 0; k < f.triple_cols.size(); ++k) {
      const int c = f.triple_cols[k];
      const InteractionId id = triple_ids[c];
      std::span<const double> xhat = f.triple_col(k);
      std::span<const double> g = dcol_triple.subspan(k * E.B, E.B);
      const double w = s.mode == InterMode::kPlain ? 1.0 : alpha->triple_alpha[c];

      if (agrads != nullptr && s.mode != InterMode::kPlain) {
        double da = 0.0;
        for (int b = 0; b < E.B; ++b) da += g[b] * xhat[b];
        agrads->triple_alpha[c] = da;
      }
      std::vector<double> dxhat(E.B);
      for (int b = 0; b < E.B; ++b) dxhat[b] = w * g[b];
      if (f.bn_applied) {
        bn_backward(xhat, dxhat, f.triple_bn[k], draw);
      } else {
        std::copy(dxhat.begin(), dxhat.end(), draw.begin());
      }
      for (int b = 0; b < E.B; ++b) {
        std::span<const double> ei = E.at(b, id.i);
        std::span<const double> ej = E.at(b, id.j);
        std::span<const double> et = E.at(b, id.t);
        double* dei = dE.data() + (static_cast<size_t>(b) * E.m + id.i) * E.d;
        double* dej = dE.data() + (static_cast<size_t>(b) * E.m + id.j) * E.d;
        double* det = dE.data() + (static_cast<size_t>(b) * E.m + id.t) * E.d;
        const double dr = draw[b];
        for (int kk = 0; kk < E.d; ++kk) {
          dei[kk] += dr * ej[kk] * et[kk];
          dej[kk] += dr * ei[kk] * et[kk];
          det[kk] += dr * ei[kk] * ej[kk];
        }
      }
    }
  }
}

// Uniformly random gate set with a fixed number of open pairs; baseline for
// comparing against learned selections.
inline GateSet random_gates(int m, int64_t open_count, Rng& rng) {
  const int64_t total = pair_count(m);
  if (open_count < 0 || open_count > total) {
    throw std::invalid_argument("random_gates: open count out of range");
  }
  std::vector<int> order(total);
  for (int64_t c = 0; c < total; ++c) order[c] = static_cast<int>(c);
  rng.shuffle(order);
  GateSet g;
  g.pair_open.assign(total, 0);
  for (int64_t k = 0; k < open_count; ++k) g.pair_open[order[k]] = 1;
  return g;
}

}  // namespace fis
