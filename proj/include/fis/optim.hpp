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

#include "fis/embedding.hpp"
#include "fis/network.hpp"

namespace fis {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (lr <= 0.0 || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 ||
        eps <= 0.0) {
      throw std::invalid_argument("adam: bad hyperparameters");
    }
  }
};

// First/second moment accumulators for one tensor.
struct AdamTensor {
  std::vector<double> m;
  std::vector<double> v;

  void init(size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

namespace detail {

inline void check_finite(double g, const std::string& tensor) {
  if (!std::isfinite(g)) {
    throw std::runtime_error("adam: non-finite gradient in tensor " + tensor);
  }
}

}  // namespace detail

// Standard bias-corrected Adam update; t is the shared step counter and must
// already include this step (t >= 1).
inline void adam_step_dense(std::span<double> params, std::span<const double> grads,
                            AdamTensor& state, int64_t t, const AdamConfig& cfg,
                            const std::string& tensor) {
  if (params.size() != grads.size() || state.m.size() != params.size()) {
    throw std::invalid_argument("adam: shape mismatch for tensor " + tensor);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    detail::check_finite(g, tensor);
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// Lazy variant for row tables: only rows present in the sparse gradient touch
// their moments and values; bias correction uses the shared step counter.
inline void adam_step_lazy_rows(std::vector<double>& table, int width,
                                const SparseRowGrad& grad, AdamTensor& state,
                                int64_t t, const AdamConfig& cfg,
                                const std::string& tensor) {
  if (state.m.size() != table.size() || grad.width != width) {
    throw std::invalid_argument("adam: shape mismatch for tensor " + tensor);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t r = 0; r < grad.rows.size(); ++r) {
    const size_t base = static_cast<size_t>(grad.rows[r]) * width;
    const double* g = grad.vals.data() + r * width;
    for (int k = 0; k < width; ++k) {
      detail::check_finite(g[k], tensor);
      double& m = state.m[base + k];
      double& v = state.v[base + k];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[k];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[k] * g[k];
      table[base + k] -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    }
  }
}

struct GrdaConfig {
  double lr = 0.01;  // gamma
  double c = 0.005;
  double mu = 0.6;

  void validate() const {
    if (lr <= 0.0) throw std::invalid_argument("grda: lr must be > 0");
    if (c < 0.0) throw std::invalid_argument("grda: c must be >= 0");
  }
};

// Generalized regularized dual averaging. The update solves, per coordinate,
//
//   argmin_a { a*(-a0 + lr*acc) + g(t)*|a| + 1/2*a^2 },  g(t) = c*lr^0.5*(t*lr)^mu
//
// whose closed form is soft-thresholding of u = a0 - lr*acc at level g(t).
// Exact zeros from the max(|u|-g, 0) branch are what the gate extraction
// relies on, so no epsilon fuzz is applied anywhere here.
struct GrdaState {
  GrdaConfig cfg;
  int64_t t = 0;
  std::vector<double> alpha0;
  std::vector<double> accumulator;

  void init(std::span<const double> alpha, const GrdaConfig& config) {
    config.validate();
    cfg = config;
    t = 0;
    alpha0.assign(alpha.begin(), alpha.end());
    accumulator.assign(alpha.size(), 0.0);
  }

  double threshold() const {
    return cfg.c * std::sqrt(cfg.lr) *
           std::pow(static_cast<double>(t) * cfg.lr, cfg.mu);
  }

  // grad must be evaluated at the alpha currently held by the caller.
  void step(std::span<double> alpha, std::span<const double> grad) {
    if (alpha.size() != alpha0.size() || grad.size() != alpha0.size()) {
      throw std::invalid_argument("grda: shape mismatch");
    }
    for (size_t i = 0; i < grad.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        throw std::runtime_error("grda: non-finite gradient");
      }
      accumulator[i] += grad[i];
    }
    t += 1;
    const double g = threshold();
    for (size_t i = 0; i < alpha.size(); ++i) {
      const double u = alpha0[i] - cfg.lr * accumulator[i];
      const double mag = std::abs(u) - g;
      alpha[i] = mag > 0.0 ? (u > 0.0 ? mag : -mag) : 0.0;
    }
  }
};

// Adam states for every dense and row tensor of a model, sharing one step
// counter so all tensors see consistent bias correction.
struct ModelAdam {
  AdamConfig cfg;
  int64_t t = 0;
  std::vector<AdamTensor> emb;
  std::vector<AdamTensor> lin;
  AdamTensor bias;
  std::vector<AdamTensor> mlp_W;
  std::vector<AdamTensor> mlp_b;
  AdamTensor alpha_pair;
  AdamTensor alpha_triple;

  void init(const Model& model, const AdamConfig& config) {
    config.validate();
    cfg = config;
    t = 0;
    emb.resize(model.m());
    lin.resize(model.m());
    for (int f = 0; f < model.m(); ++f) {
      emb[f].init(model.emb.fields[f].size());
      lin[f].init(model.lin.fields[f].size());
    }
    bias.init(1);
    mlp_W.resize(model.mlp.size());
    mlp_b.resize(model.mlp.size());
    for (size_t l = 0; l < model.mlp.size(); ++l) {
      mlp_W[l].init(model.mlp[l].W.size());
      mlp_b[l].init(model.mlp[l].b.size());
    }
    alpha_pair.init(model.alpha.pair_alpha.size());
    alpha_triple.init(model.alpha.triple_alpha.size());
  }

  // Applies one Adam step to the network weights v; alpha vectors are touched
  // only when the respective flag is set (retrain mode).
  void step(Model& model, const ModelGrads& grads, bool update_alpha_pair,
            bool update_alpha_triple) {
    t += 1;
    for (int f = 0; f < model.m(); ++f) {
      adam_step_lazy_rows(model.emb.fields[f], model.cfg.d, grads.emb[f], emb[f], t,
                          cfg, "emb[" + std::to_string(f) + "]");
      adam_step_lazy_rows(model.lin.fields[f], 1, grads.lin[f], lin[f], t, cfg,
                          "lin[" + std::to_string(f) + "]");
    }
    double bias_param[1] = {model.lin.bias};
    const double bias_grad[1] = {grads.bias};
    adam_step_dense(bias_param, bias_grad, bias, t, cfg, "bias");
    model.lin.bias = bias_param[0];
    for (size_t l = 0; l < model.mlp.size(); ++l) {
      adam_step_dense(model.mlp[l].W, grads.mlp_W[l], mlp_W[l], t, cfg,
                      "mlp_W[" + std::to_string(l) + "]");
      adam_step_dense(model.mlp[l].b, grads.mlp_b[l], mlp_b[l], t, cfg,
                      "mlp_b[" + std::to_string(l) + "]");
    }
    if (update_alpha_pair && !model.alpha.pair_alpha.empty()) {
      adam_step_dense(model.alpha.pair_alpha, grads.alpha.pair_alpha, alpha_pair, t,
                      cfg, "alpha_pair");
    }
    if (update_alpha_triple && !model.alpha.triple_alpha.empty()) {
      adam_step_dense(model.alpha.triple_alpha, grads.alpha.triple_alpha,
                      alpha_triple, t, cfg, "alpha_triple");
    }
  }
};

}  // namespace fis
