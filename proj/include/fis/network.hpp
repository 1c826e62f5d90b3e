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
#include "fis/interaction.hpp"
#include "fis/rng.hpp"

namespace fis {

enum class Head { kFm, kFm3, kDeepFm, kIpnn };

inline const char* head_name(Head h) {
  switch (h) {
    case Head::kFm: return "fm";
    case Head::kFm3: return "fm3";
    case Head::kDeepFm: return "deepfm";
    case Head::kIpnn: return "ipnn";
  }
  return "?";
}

inline Head head_from_name(const std::string& s) {
  if (s == "fm") return Head::kFm;
  if (s == "fm3") return Head::kFm3;
  if (s == "deepfm") return Head::kDeepFm;
  if (s == "ipnn") return Head::kIpnn;
  throw std::invalid_argument("unknown head: " + s);
}

struct MlpLayer {
  int in = 0;
  int out = 0;
  bool relu = true;  // final layer is identity
  std::vector<double> W;  // out x in row-major
  std::vector<double> b;
};

struct ModelConfig {
  Head head = Head::kFm;
  int d = 40;
  // Full width list for DEEPFM / IPNN, last entry is the 1-unit prediction
  // layer (relu on all but the last).
  std::vector<int> mlp_layers;
  bool mlp_bn = false;
  InterSettings inter;
  double alpha_init = 0.7;
  double bn_momentum = 0.99;
  double bn_eps = 1e-5;

  bool use_triples() const { return head == Head::kFm3 || inter.use_triples; }
  bool has_mlp() const { return head == Head::kDeepFm || head == Head::kIpnn; }

  void validate() const {
    if (d < 1) throw std::invalid_argument("model: d must be >= 1");
    if (has_mlp()) {
      if (mlp_layers.empty()) {
        throw std::invalid_argument("model: deepfm/ipnn require at least one MLP layer");
      }
      if (mlp_layers.back() != 1) {
        throw std::invalid_argument("model: last MLP layer must have width 1");
      }
    } else if (!mlp_layers.empty()) {
      throw std::invalid_argument("model: fm/fm3 heads take no MLP");
    }
    for (int width : mlp_layers) {
      if (width < 1) throw std::invalid_argument("model: MLP width must be >= 1");
    }
    if (bn_momentum <= 0.0 || bn_momentum >= 1.0 || bn_eps <= 0.0) {
      throw std::invalid_argument("model: bn momentum in (0,1), eps > 0");
    }
  }
};

struct Model {
  FieldSchema schema;
  ModelConfig cfg;

  EmbeddingTable emb;
  LinearParams lin;
  ArchitectureParams alpha;
  GateSet gates;
  BnState bn_pairs;
  BnState bn_triples;
  std::vector<MlpLayer> mlp;
  std::vector<BnState> mlp_bn;  // per hidden layer when cfg.mlp_bn

  int m() const { return schema.field_count; }

  // Interaction columns feeding the head: all canonical columns except
  // closed-gate ones in RETRAIN mode.
  int active_pair_cols() const {
    if (cfg.inter.mode != InterMode::kRetrain) return static_cast<int>(pair_count(m()));
    return static_cast<int>(gates.open_pairs());
  }
  int active_triple_cols() const {
    if (!cfg.use_triples()) return 0;
    if (cfg.inter.mode != InterMode::kRetrain) return static_cast<int>(triple_count(m()));
    return static_cast<int>(gates.open_triples());
  }

  // IPNN consumes [E, weighted products, linear scalar]; DEEPFM consumes E.
  int mlp_input_dim() const {
    if (cfg.head == Head::kDeepFm) return m() * cfg.d;
    return m() * cfg.d + active_pair_cols() + active_triple_cols() + 1;
  }

  void init(const FieldSchema& s, const ModelConfig& c, uint64_t seed) {
    s.validate();
    c.validate();
    schema = s;
    cfg = c;
    cfg.inter.use_triples = cfg.use_triples();

    Rng emb_rng(seed, "init-emb");
    emb.init(schema, cfg.d, emb_rng);
    lin.init(schema);
    alpha.init(m(), cfg.use_triples(), cfg.alpha_init);
    gates.all_open(m(), cfg.use_triples());
    bn_pairs.init(pair_count(m()), cfg.bn_momentum, cfg.bn_eps);
    bn_triples.init(cfg.use_triples() ? triple_count(m()) : 0, cfg.bn_momentum,
                    cfg.bn_eps);
    if (cfg.has_mlp()) init_mlp(seed);
  }

  // Rebuild MLP for the current gate set (used after gates change in RETRAIN
  // mode, where the IPNN input dimension depends on open columns).
  void init_mlp(uint64_t seed) {
    Rng rng(seed, "init-mlp");
    mlp.clear();
    mlp_bn.clear();
    int in = mlp_input_dim();
    const std::vector<int>& widths = cfg.mlp_layers;
    for (size_t l = 0; l < widths.size(); ++l) {
      MlpLayer layer;
      layer.in = in;
      layer.out = widths[l];
      layer.relu = l + 1 < widths.size();
      layer.W.resize(static_cast<size_t>(layer.out) * layer.in);
      layer.b.assign(layer.out, 0.0);
      const double bound = std::sqrt(6.0 / layer.in);
      for (double& w : layer.W) w = rng.uniform(-bound, bound);
      mlp.push_back(std::move(layer));
      in = widths[l];
    }
    if (cfg.mlp_bn && widths.size() > 1) {
      mlp_bn.resize(widths.size() - 1);
      for (size_t l = 0; l < mlp_bn.size(); ++l) {
        mlp_bn[l].init(widths[l], cfg.bn_momentum, cfg.bn_eps);
      }
    }
  }
};

// Forward caches for one batch.
struct MlpCache {
  std::vector<std::vector<double>> acts;   // acts[l] is B x layer-input width
  std::vector<std::vector<double>> xhat;   // post-BN pre-relu per hidden layer
  std::vector<std::vector<BnCache>> bn;    // per hidden layer, per unit
};

struct ForwardCache {
  bool train = false;
  BatchEmbed E;
  InterForward inter;
  std::vector<double> lin_term;  // per instance, includes global bias
  MlpCache mlp;
  std::vector<double> logits;
  std::vector<double> probs;
};

namespace detail {

inline void mlp_forward(Model& model, const std::vector<double>& input, int B,
                        bool train, MlpCache& cache, std::vector<double>& out) {
  cache.acts.clear();
  cache.xhat.assign(model.mlp.size(), {});
  cache.bn.assign(model.mlp.size(), {});
  cache.acts.push_back(input);
  const bool use_bn = model.cfg.mlp_bn;

  std::vector<double> cur = input;
  for (size_t l = 0; l < model.mlp.size(); ++l) {
    const MlpLayer& layer = model.mlp[l];
    std::vector<double> z(static_cast<size_t>(B) * layer.out, 0.0);
    for (int b = 0; b < B; ++b) {
      const double* x = cur.data() + static_cast<size_t>(b) * layer.in;
      double* zb = z.data() + static_cast<size_t>(b) * layer.out;
      for (int o = 0; o < layer.out; ++o) {
        const double* wrow = layer.W.data() + static_cast<size_t>(o) * layer.in;
        double s = layer.b[o];
        for (int i = 0; i < layer.in; ++i) s += wrow[i] * x[i];
        zb[o] = s;
      }
    }
    if (layer.relu) {
      if (use_bn) {
        // Per-unit BN over the batch, scale 1 / shift 0, before the relu.
        BnState& state = model.mlp_bn[l];
        cache.bn[l].resize(layer.out);
        std::vector<double> col(B);
        for (int o = 0; o < layer.out; ++o) {
          for (int b = 0; b < B; ++b) col[b] = z[static_cast<size_t>(b) * layer.out + o];
          if (train) {
            cache.bn[l][o] = bn_forward_train(col, state, o);
          } else {
            bn_forward_eval(col, state, o);
          }
          for (int b = 0; b < B; ++b) z[static_cast<size_t>(b) * layer.out + o] = col[b];
        }
        cache.xhat[l] = z;
      }
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    if (l + 1 < model.mlp.size()) {
      cache.acts.push_back(z);
      cur = std::move(z);
    } else {
      out = std::move(z);
    }
  }
}

// Backward through the MLP; fills per-layer weight grads and the gradient
// w.r.t. the network input.
inline void mlp_backward(const Model& model, const MlpCache& cache,
                         std::span<const double> dout, int B,
                         std::vector<std::vector<double>>& dW,
                         std::vector<std::vector<double>>& db,
                         std::vector<double>& dinput) {
  const size_t L = model.mlp.size();
  dW.resize(L);
  db.resize(L);
  std::vector<double> da(dout.begin(), dout.end());
  for (size_t l = L; l-- > 0;) {
    const MlpLayer& layer = model.mlp[l];
    dW[l].assign(layer.W.size(), 0.0);
    db[l].assign(layer.b.size(), 0.0);
    std::vector<double> dz = std::move(da);
    if (layer.relu) {
      // relu mask; under BN the mask sits on xhat, then BN backward to z.
      if (model.cfg.mlp_bn) {
        for (size_t idx = 0; idx < dz.size(); ++idx) {
          if (cache.xhat[l][idx] <= 0.0) dz[idx] = 0.0;
        }
        std::vector<double> col_x(B), col_g(B), col_dx(B);
        for (int o = 0; o < layer.out; ++o) {
          for (int b = 0; b < B; ++b) {
            col_x[b] = cache.xhat[l][static_cast<size_t>(b) * layer.out + o];
            col_g[b] = dz[static_cast<size_t>(b) * layer.out + o];
          }
          bn_backward(col_x, col_g, cache.bn[l][o], col_dx);
          for (int b = 0; b < B; ++b) dz[static_cast<size_t>(b) * layer.out + o] = col_dx[b];
        }
      } else {
        // Without BN the post-activation of this layer is acts[l+1] when it
        // exists; the last hidden layer's activation was consumed by the
        // output layer, so it is always present in acts.
        const std::vector<double>& post = cache.acts[l + 1];
        for (size_t idx = 0; idx < dz.size(); ++idx) {
          if (post[idx] <= 0.0) dz[idx] = 0.0;
        }
      }
    }
    const std::vector<double>& x = cache.acts[l];
    da.assign(static_cast<size_t>(B) * layer.in, 0.0);
    for (int b = 0; b < B; ++b) {
      const double* xb = x.data() + static_cast<size_t>(b) * layer.in;
      const double* dzb = dz.data() + static_cast<size_t>(b) * layer.out;
      double* dab = da.data() + static_cast<size_t>(b) * layer.in;
      for (int o = 0; o < layer.out; ++o) {
        const double g = dzb[o];
        if (g == 0.0) continue;
        db[l][o] += g;
        double* dwrow = dW[l].data() + static_cast<size_t>(o) * layer.in;
        const double* wrow = layer.W.data() + static_cast<size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) {
          dwrow[i] += g * xb[i];
          dab[i] += g * wrow[i];
        }
      }
    }
  }
  dinput = std::move(da);
}

}  // namespace detail

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// softplus(z) = log(1 + exp(z)) without overflow for large |z|.
inline double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// Mean cross-entropy, fused with the sigmoid: L_b = softplus(logit) - y*logit.
inline double ce_loss_from_logits(std::span<const double> logits,
                                  std::span<const int> labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("loss: need equal nonzero logit/label counts");
  }
  double total = 0.0;
  for (size_t b = 0; b < logits.size(); ++b) {
    total += softplus(logits[b]) - static_cast<double>(labels[b]) * logits[b];
  }
  return total / static_cast<double>(logits.size());
}

// dL/dlogit for the batch-mean loss: (sigmoid(logit) - y) / B.
inline std::vector<double> ce_loss_grad(std::span<const double> logits,
                                        std::span<const int> labels) {
  std::vector<double> g(logits.size());
  const double inv = 1.0 / static_cast<double>(logits.size());
  for (size_t b = 0; b < logits.size(); ++b) {
    g[b] = (sigmoid(logits[b]) - static_cast<double>(labels[b])) * inv;
  }
  return g;
}

inline ForwardCache forward(Model& model, const MiniBatch& batch, bool train) {
  const int B = static_cast<int>(batch.rows.size());
  if (B < 1) throw std::invalid_argument("forward: empty batch");

  ForwardCache cache;
  cache.train = train;
  cache.E = embed_batch(batch, model.emb, model.schema.multi_hot_reduce);
  cache.inter = interaction_forward(cache.E, model.cfg.inter, &model.alpha,
                                    &model.gates, &model.bn_pairs,
                                    &model.bn_triples, train);
  cache.lin_term.resize(B);
  for (int b = 0; b < B; ++b) cache.lin_term[b] = linear_term(batch.at(b), model.lin);

  cache.logits.assign(B, 0.0);
  switch (model.cfg.head) {
    case Head::kFm:
    case Head::kFm3:
      for (int b = 0; b < B; ++b) {
        cache.logits[b] = cache.lin_term[b] + cache.inter.l_inter[b];
      }
      break;
    case Head::kDeepFm: {
      std::vector<double> out;
      detail::mlp_forward(model, cache.E.data, B, train, cache.mlp, out);
      for (int b = 0; b < B; ++b) {
        cache.logits[b] = cache.lin_term[b] + cache.inter.l_inter[b] + out[b];
      }
      break;
    }
    case Head::kIpnn: {
      const int md = model.m() * model.cfg.d;
      const size_t np = cache.inter.pair_col_count();
      const size_t nt = cache.inter.triple_col_count();
      const int in = md + static_cast<int>(np + nt) + 1;
      if (in != model.mlp_input_dim()) {
        throw std::logic_error("ipnn: input width does not match MLP");
      }
      std::vector<double> input(static_cast<size_t>(B) * in);
      for (int b = 0; b < B; ++b) {
        double* dst = input.data() + static_cast<size_t>(b) * in;
        const double* e = cache.E.data.data() + static_cast<size_t>(b) * md;
        std::copy(e, e + md, dst);
        for (size_t k = 0; k < np; ++k) {
          const int c = cache.inter.pair_cols[k];
          const double w = model.cfg.inter.mode == InterMode::kPlain
                               ? 1.0
                               : model.alpha.pair_alpha[c];
          dst[md + k] = w * cache.inter.pair_col(k)[b];
        }
        for (size_t k = 0; k < nt; ++k) {
          const int c = cache.inter.triple_cols[k];
          const double w = model.cfg.inter.mode == InterMode::kPlain
                               ? 1.0
                               : model.alpha.triple_alpha[c];
          dst[md + np + k] = w * cache.inter.triple_col(k)[b];
        }
        dst[in - 1] = cache.lin_term[b];
      }
      std::vector<double> out;
      detail::mlp_forward(model, input, B, train, cache.mlp, out);
      for (int b = 0; b < B; ++b) cache.logits[b] = out[b];
      break;
    }
  }
  cache.probs.resize(B);
  for (int b = 0; b < B; ++b) cache.probs[b] = sigmoid(cache.logits[b]);
  return cache;
}

// Gradients for every trainable tensor of a model.
struct ModelGrads {
  std::vector<SparseRowGrad> emb;  // per field, width d
  std::vector<SparseRowGrad> lin;  // per field, width 1
  double bias = 0.0;
  std::vector<std::vector<double>> mlp_W;
  std::vector<std::vector<double>> mlp_b;
  InterGrads alpha;

  void init(const Model& model) {
    emb.assign(model.m(), SparseRowGrad(model.cfg.d));
    lin.assign(model.m(), SparseRowGrad(1));
    bias = 0.0;
    mlp_W.clear();
    mlp_b.clear();
    alpha.pair_alpha.clear();
    alpha.triple_alpha.clear();
  }
};

inline ModelGrads backward(Model& model, const MiniBatch& batch,
                           const ForwardCache& cache,
                           std::span<const int> labels) {
  const int B = static_cast<int>(batch.rows.size());
  if (B < 1) throw std::invalid_argument("backward: empty batch");
  if (!cache.train) throw std::logic_error("backward: forward pass was not in train mode");

  ModelGrads grads;
  grads.init(model);

  std::vector<double> dlogit = ce_loss_grad(cache.logits, labels);
  std::vector<double> dE(cache.E.data.size(), 0.0);
  std::vector<double> dlin(B, 0.0);

  const size_t np = cache.inter.pair_col_count();
  const size_t nt = cache.inter.triple_col_count();
  std::vector<double> dcol_pair(np * B, 0.0);
  std::vector<double> dcol_triple(nt * B, 0.0);

  switch (model.cfg.head) {
    case Head::kFm:
    case Head::kFm3:
      for (int b = 0; b < B; ++b) {
        dlin[b] = dlogit[b];
        for (size_t k = 0; k < np; ++k) dcol_pair[k * B + b] = dlogit[b];
        for (size_t k = 0; k < nt; ++k) dcol_triple[k * B + b] = dlogit[b];
      }
      break;
    case Head::kDeepFm: {
      for (int b = 0; b < B; ++b) {
        dlin[b] = dlogit[b];
        for (size_t k = 0; k < np; ++k) dcol_pair[k * B + b] = dlogit[b];
        for (size_t k = 0; k < nt; ++k) dcol_triple[k * B + b] = dlogit[b];
      }
      std::vector<double> dinput;
      detail::mlp_backward(model, cache.mlp, dlogit, B, grads.mlp_W, grads.mlp_b,
                           dinput);
      for (size_t idx = 0; idx < dE.size(); ++idx) dE[idx] += dinput[idx];
      break;
    }
    case Head::kIpnn: {
      std::vector<double> dinput;
      detail::mlp_backward(model, cache.mlp, dlogit, B, grads.mlp_W, grads.mlp_b,
                           dinput);
      const int md = model.m() * model.cfg.d;
      const int in = model.mlp_input_dim();
      for (int b = 0; b < B; ++b) {
        const double* src = dinput.data() + static_cast<size_t>(b) * in;
        double* de = dE.data() + static_cast<size_t>(b) * md;
        for (int idx = 0; idx < md; ++idx) de[idx] += src[idx];
        for (size_t k = 0; k < np; ++k) dcol_pair[k * B + b] = src[md + k];
        for (size_t k = 0; k < nt; ++k) dcol_triple[k * B + b] = src[md + np + k];
        dlin[b] = src[in - 1];
      }
      break;
    }
  }

  const bool want_alpha = model.cfg.inter.mode != InterMode::kPlain;
  interaction_backward(cache.E, model.cfg.inter, &model.alpha, &model.gates,
                       cache.inter, dcol_pair, dcol_triple, dE,
                       want_alpha ? &grads.alpha : nullptr);

  embed_batch_backward(batch, cache.E, model.schema.multi_hot_reduce, dE, grads.emb);
  for (int b = 0; b < B; ++b) {
    linear_backward(batch.at(b), dlin[b], grads.lin, grads.bias);
  }
  return grads;
}

}  // namespace fis
