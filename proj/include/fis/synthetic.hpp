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
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/rng.hpp"

namespace fis {

// Incomplete poly-2 (optionally poly-3) scoring function over m categorical
// fields with N categories each:
//
//   z(x) = b + sum_i w[i][x_i]
//            + sum_{(i,j) in pairs}    v[(i,j)][x_i*N + x_j]
//            + sum_{(i,j,t) in triples} u[(i,j,t)][(x_i*N + x_j)*N + x_t]
//
//   label = 1  iff  z(x) + noise >= threshold
//
// Only the planted interactions contribute; everything else is noise floor.
struct SyntheticSpec {
  int m = 0;
  int N = 0;
  uint64_t seed = 0;
  double bias = 0.0;
  double noise_sigma = 0.0;
  double threshold = 0.0;

  std::vector<InteractionId> planted_pairs;
  std::vector<InteractionId> planted_triples;

  std::vector<std::vector<double>> p;  // m x N category distributions
  std::vector<std::vector<double>> w;  // m x N linear weights
  std::vector<std::vector<double>> v;  // per planted pair, N*N
  std::vector<std::vector<double>> u;  // per planted triple, N*N*N

  void validate() const {
    if (m < 2 || N < 1) throw std::invalid_argument("synthetic spec: need m >= 2, N >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("synthetic spec: negative noise");
    auto check_id = [&](const InteractionId& id) {
      if (id.i < 0 || id.j >= m || (id.order == Order::kTriple && id.t >= m)) {
        throw std::invalid_argument("synthetic spec: planted interaction out of range");
      }
    };
    for (const auto& id : planted_pairs) {
      if (id.order != Order::kPair) throw std::invalid_argument("synthetic spec: pair list holds non-pair");
      check_id(id);
    }
    for (const auto& id : planted_triples) {
      if (id.order != Order::kTriple) throw std::invalid_argument("synthetic spec: triple list holds non-triple");
      check_id(id);
    }
    if (static_cast<int>(p.size()) != m || static_cast<int>(w.size()) != m) {
      throw std::invalid_argument("synthetic spec: p/w field count mismatch");
    }
    for (int f = 0; f < m; ++f) {
      if (static_cast<int>(p[f].size()) != N || static_cast<int>(w[f].size()) != N) {
        throw std::invalid_argument("synthetic spec: p/w category count mismatch");
      }
      double total = 0.0;
      for (double q : p[f]) {
        if (q < 0.0) throw std::invalid_argument("synthetic spec: negative probability");
        total += q;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("synthetic spec: probabilities must sum to 1");
      }
    }
    if (v.size() != planted_pairs.size() || u.size() != planted_triples.size()) {
      throw std::invalid_argument("synthetic spec: weight table count mismatch");
    }
    const size_t nn = static_cast<size_t>(N) * N;
    for (const auto& table : v) {
      if (table.size() != nn) throw std::invalid_argument("synthetic spec: bilinear table size");
    }
    for (const auto& table : u) {
      if (table.size() != nn * N) throw std::invalid_argument("synthetic spec: trilinear table size");
    }
  }

  FieldSchema schema() const {
    return FieldSchema::one_hot(std::vector<int64_t>(m, N));
  }

  // Noiseless score.
  double score(const std::vector<int32_t>& x) const {
    double z = bias;
    for (int f = 0; f < m; ++f) z += w[f][x[f]];
    for (size_t k = 0; k < planted_pairs.size(); ++k) {
      const InteractionId& id = planted_pairs[k];
      z += v[k][static_cast<size_t>(x[id.i]) * N + x[id.j]];
    }
    for (size_t k = 0; k < planted_triples.size(); ++k) {
      const InteractionId& id = planted_triples[k];
      z += u[k][(static_cast<size_t>(x[id.i]) * N + x[id.j]) * N + x[id.t]];
    }
    return z;
  }
};

namespace detail {

// Inverse-CDF draw from a categorical distribution; consumes one uniform.
inline int32_t sample_category(const std::vector<double>& probs, Rng& rng) {
  const double r = rng.uniform();
  double acc = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (r < acc) return static_cast<int32_t>(k);
  }
  return static_cast<int32_t>(probs.size()) - 1;  // guard against rounding
}

inline std::vector<int32_t> sample_input(const SyntheticSpec& spec, Rng& rng) {
  std::vector<int32_t> x(spec.m);
  for (int f = 0; f < spec.m; ++f) x[f] = sample_category(spec.p[f], rng);
  return x;
}

}  // namespace detail

struct SyntheticPlan {
  int m = 6;
  int N = 60;
  std::vector<InteractionId> planted_pairs;
  std::vector<InteractionId> planted_triples;
  int calibration_samples = 100000;
  double noise_scale = 0.01;  // noise_sigma = noise_scale * std(z)
};

// Samples distributions and weights, then calibrates threshold and noise from
// the empirical noiseless score distribution: threshold is its median (labels
// split roughly 50/50) and noise_sigma is noise_scale times its std.
inline SyntheticSpec make_synthetic_spec(const SyntheticPlan& plan, uint64_t seed) {
  SyntheticSpec spec;
  spec.m = plan.m;
  spec.N = plan.N;
  spec.seed = seed;
  spec.planted_pairs = plan.planted_pairs;
  spec.planted_triples = plan.planted_triples;

  Rng rng(seed, "synth-spec");

  // Dirichlet(1) via normalized Exp(1) draws.
  spec.p.resize(plan.m);
  for (int f = 0; f < plan.m; ++f) {
    spec.p[f].resize(plan.N);
    double total = 0.0;
    for (int k = 0; k < plan.N; ++k) {
      spec.p[f][k] = -std::log(rng.uniform_open());
      total += spec.p[f][k];
    }
    for (int k = 0; k < plan.N; ++k) spec.p[f][k] /= total;
  }

  spec.w.resize(plan.m);
  for (int f = 0; f < plan.m; ++f) {
    spec.w[f].resize(plan.N);
    for (int k = 0; k < plan.N; ++k) spec.w[f][k] = rng.normal();
  }
  spec.v.resize(plan.planted_pairs.size());
  for (auto& table : spec.v) {
    table.resize(static_cast<size_t>(plan.N) * plan.N);
    for (double& val : table) val = rng.normal();
  }
  spec.u.resize(plan.planted_triples.size());
  for (auto& table : spec.u) {
    table.resize(static_cast<size_t>(plan.N) * plan.N * plan.N);
    for (double& val : table) val = rng.normal();
  }
  spec.bias = rng.normal();

  Rng calib(seed, "synth-calib");
  std::vector<double> z(plan.calibration_samples);
  for (int s = 0; s < plan.calibration_samples; ++s) {
    z[s] = spec.score(detail::sample_input(spec, calib));
  }
  double mean = 0.0;
  for (double value : z) mean += value;
  mean /= z.size();
  double var = 0.0;
  for (double value : z) var += (value - mean) * (value - mean);
  var /= z.size();
  spec.noise_sigma = plan.noise_scale * std::sqrt(var);

  std::vector<double> sorted = z;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  spec.threshold = n % 2 == 1 ? sorted[n / 2]
                              : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  spec.validate();
  return spec;
}

// Instances are i.i.d.; train and test come from disjoint substreams so their
// sizes can change independently without reshuffling each other.
inline Dataset sample_synthetic(const SyntheticSpec& spec, int64_t n,
                                std::string_view stream) {
  Dataset d;
  d.schema = spec.schema();
  d.instances.reserve(n);
  Rng rng(spec.seed, stream);
  for (int64_t s = 0; s < n; ++s) {
    std::vector<int32_t> x = detail::sample_input(spec, rng);
    const double noise = spec.noise_sigma > 0.0 ? rng.normal(0.0, spec.noise_sigma) : 0.0;
    Instance inst;
    inst.label = spec.score(x) + noise >= spec.threshold ? 1 : 0;
    inst.indices.reserve(spec.m);
    for (int32_t value : x) inst.indices.push_back({value});
    d.instances.push_back(std::move(inst));
  }
  return d;
}

inline std::pair<Dataset, Dataset> generate_synthetic(const SyntheticSpec& spec,
                                                      int64_t n_train,
                                                      int64_t n_test) {
  return {sample_synthetic(spec, n_train, "synth-train"),
          sample_synthetic(spec, n_test, "synth-test")};
}

inline void save_synthetic_spec(const SyntheticSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write synthetic spec: " + path);
  out << std::setprecision(17);
  out << "fis-synthetic v1\n";
  out << "m " << spec.m << "\nN " << spec.N << "\nseed " << spec.seed << "\n";
  out << "bias " << spec.bias << "\nnoise_sigma " << spec.noise_sigma
      << "\nthreshold " << spec.threshold << "\n";
  out << "pairs " << spec.planted_pairs.size() << "\n";
  for (const auto& id : spec.planted_pairs) out << id.i << ' ' << id.j << "\n";
  out << "triples " << spec.planted_triples.size() << "\n";
  for (const auto& id : spec.planted_triples) {
    out << id.i << ' ' << id.j << ' ' << id.t << "\n";
  }
  auto dump = [&out](const char* tag, const std::vector<std::vector<double>>& tables) {
    out << tag << "\n";
    for (const auto& table : tables) {
      for (size_t k = 0; k < table.size(); ++k) {
        out << table[k] << (k + 1 == table.size() ? '\n' : ' ');
      }
    }
  };
  dump("p", spec.p);
  dump("w", spec.w);
  dump("v", spec.v);
  dump("u", spec.u);
}

inline SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synthetic spec: " + path);
  std::string magic, version, word;
  in >> magic >> version;
  if (magic != "fis-synthetic" || version != "v1") {
    throw std::runtime_error("unrecognized synthetic spec header in " + path);
  }
  SyntheticSpec spec;
  in >> word >> spec.m >> word >> spec.N >> word >> spec.seed;
  in >> word >> spec.bias >> word >> spec.noise_sigma >> word >> spec.threshold;
  size_t n_pairs = 0;
  in >> word >> n_pairs;
  for (size_t k = 0; k < n_pairs; ++k) {
    int i = 0, j = 0;
    in >> i >> j;
    spec.planted_pairs.push_back(pair_id(i, j));
  }
  size_t n_triples = 0;
  in >> word >> n_triples;
  for (size_t k = 0; k < n_triples; ++k) {
    int i = 0, j = 0, t = 0;
    in >> i >> j >> t;
    spec.planted_triples.push_back(triple_id(i, j, t));
  }
  auto slurp = [&](const char* tag, std::vector<std::vector<double>>& tables,
                   size_t count, size_t size) {
    in >> word;
    if (word != tag) throw std::runtime_error("synthetic spec: expected section " + std::string(tag));
    tables.resize(count);
    for (auto& table : tables) {
      table.resize(size);
      for (double& value : table) in >> value;
    }
  };
  const size_t N = spec.N;
  slurp("p", spec.p, spec.m, N);
  slurp("w", spec.w, spec.m, N);
  slurp("v", spec.v, spec.planted_pairs.size(), N * N);
  slurp("u", spec.u, spec.planted_triples.size(), N * N * N);
  if (!in) throw std::runtime_error("synthetic spec: truncated file " + path);
  spec.validate();
  return spec;
}

}  // namespace fis
