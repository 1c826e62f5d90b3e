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
#include <unordered_map>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/rng.hpp"

namespace fis {

// Sparse gradient over the rows of one table: only touched rows appear.
// width is the row length (d for embeddings, 1 for linear weights).
struct SparseRowGrad {
  int width = 0;
  std::vector<int32_t> rows;
  std::vector<double> vals;  // rows.size() * width
  std::unordered_map<int32_t, size_t> slot;

  explicit SparseRowGrad(int w = 0) : width(w) {}

  void clear() {
    rows.clear();
    vals.clear();
    slot.clear();
  }

  double* at(int32_t row) {
    auto [it, inserted] = slot.try_emplace(row, rows.size());
    if (inserted) {
      rows.push_back(row);
      vals.resize(vals.size() + width, 0.0);
    }
    return vals.data() + it->second * width;
  }

  const double* find(int32_t row) const {
    auto it = slot.find(row);
    return it == slot.end() ? nullptr : vals.data() + it->second * width;
  }
};

// Per-field dense embedding matrices, n_i x d row-major.
struct EmbeddingTable {
  int d = 0;
  std::vector<int64_t> cardinalities;
  std::vector<std::vector<double>> fields;  // fields[f] has cardinalities[f]*d entries

  void init(const FieldSchema& schema, int dim, Rng& rng) {
    if (dim < 1) throw std::invalid_argument("embedding: d must be >= 1");
    d = dim;
    cardinalities = schema.cardinalities;
    fields.resize(schema.field_count);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int f = 0; f < schema.field_count; ++f) {
      fields[f].resize(static_cast<size_t>(cardinalities[f]) * dim);
      for (double& value : fields[f]) value = rng.normal(0.0, stddev);
    }
  }

  int field_count() const { return static_cast<int>(fields.size()); }

  std::span<const double> row(int f, int32_t idx) const {
    if (idx < 0 || idx >= cardinalities[f]) {
      throw std::out_of_range("embedding: index " + std::to_string(idx) +
                              " out of range for field " + std::to_string(f));
    }
    return {fields[f].data() + static_cast<size_t>(idx) * d, static_cast<size_t>(d)};
  }

  std::span<double> row_mut(int f, int32_t idx) {
    return {fields[f].data() + static_cast<size_t>(idx) * d, static_cast<size_t>(d)};
  }
};

// Per-feature scalar weights plus a global bias (the <w,x> + b term).
struct LinearParams {
  std::vector<std::vector<double>> fields;  // fields[f] has cardinality[f] entries
  double bias = 0.0;

  void init(const FieldSchema& schema) {
    fields.resize(schema.field_count);
    for (int f = 0; f < schema.field_count; ++f) {
      fields[f].assign(schema.cardinalities[f], 0.0);
    }
    bias = 0.0;
  }
};

struct EmbeddedInstance {
  int d = 0;
  std::vector<std::vector<double>> e;  // m vectors of length d
};

// One-hot field: the row itself. Multi-hot: SUM or AVERAGE of active rows.
inline EmbeddedInstance embed(const Instance& inst, const EmbeddingTable& table,
                              Reduce reduce) {
  EmbeddedInstance out;
  out.d = table.d;
  const int m = table.field_count();
  out.e.assign(m, std::vector<double>(table.d, 0.0));
  for (int f = 0; f < m; ++f) {
    const auto& active = inst.indices[f];
    if (active.empty()) throw std::invalid_argument("embed: field with no active index");
    for (int32_t idx : active) {
      std::span<const double> r = table.row(f, idx);
      for (int k = 0; k < table.d; ++k) out.e[f][k] += r[k];
    }
    if (reduce == Reduce::kAverage && active.size() > 1) {
      const double inv = 1.0 / static_cast<double>(active.size());
      for (int k = 0; k < table.d; ++k) out.e[f][k] *= inv;
    }
  }
  return out;
}

// Backward of embed for one field of one instance; g is dL/de_f (length d).
inline void accumulate_embed_grad(const std::vector<int32_t>& active, Reduce reduce,
                                  std::span<const double> g, SparseRowGrad& grad) {
  const double scale = (reduce == Reduce::kAverage && active.size() > 1)
                           ? 1.0 / static_cast<double>(active.size())
                           : 1.0;
  for (int32_t idx : active) {
    double* acc = grad.at(idx);
    for (size_t k = 0; k < g.size(); ++k) acc[k] += scale * g[k];
  }
}

// Batch of embedded instances stored flat, B x m x d.
struct BatchEmbed {
  int B = 0;
  int m = 0;
  int d = 0;
  std::vector<double> data;

  std::span<const double> at(int b, int f) const {
    return {data.data() + (static_cast<size_t>(b) * m + f) * d,
            static_cast<size_t>(d)};
  }
  std::span<double> at_mut(int b, int f) {
    return {data.data() + (static_cast<size_t>(b) * m + f) * d,
            static_cast<size_t>(d)};
  }
};

inline BatchEmbed embed_batch(const MiniBatch& batch, const EmbeddingTable& table,
                              Reduce reduce) {
  BatchEmbed out;
  out.B = static_cast<int>(batch.rows.size());
  out.m = table.field_count();
  out.d = table.d;
  out.data.assign(static_cast<size_t>(out.B) * out.m * out.d, 0.0);
  for (int b = 0; b < out.B; ++b) {
    const Instance& inst = batch.at(b);
    for (int f = 0; f < out.m; ++f) {
      const auto& active = inst.indices[f];
      if (active.empty()) throw std::invalid_argument("embed: field with no active index");
      std::span<double> dst = out.at_mut(b, f);
      for (int32_t idx : active) {
        std::span<const double> r = table.row(f, idx);
        for (int k = 0; k < out.d; ++k) dst[k] += r[k];
      }
      if (reduce == Reduce::kAverage && active.size() > 1) {
        const double inv = 1.0 / static_cast<double>(active.size());
        for (int k = 0; k < out.d; ++k) dst[k] *= inv;
      }
    }
  }
  return out;
}

// dE is dL/dE laid out like BatchEmbed.data; accumulates into per-field grads.
inline void embed_batch_backward(const MiniBatch& batch, const BatchEmbed& shape,
                                 Reduce reduce, const std::vector<double>& dE,
                                 std::vector<SparseRowGrad>& grads) {
  for (int b = 0; b < shape.B; ++b) {
    const Instance& inst = batch.at(b);
    for (int f = 0; f < shape.m; ++f) {
      std::span<const double> g{
          dE.data() + (static_cast<size_t>(b) * shape.m + f) * shape.d,
          static_cast<size_t>(shape.d)};
      accumulate_embed_grad(inst.indices[f], reduce, g, grads[f]);
    }
  }
}

// Straight sum over active indices; multi-hot contributes one weight per
// active index regardless of the embedding reduce mode.
inline double linear_term(const Instance& inst, const LinearParams& lin) {
  double z = lin.bias;
  for (size_t f = 0; f < inst.indices.size(); ++f) {
    for (int32_t idx : inst.indices[f]) z += lin.fields[f][idx];
  }
  return z;
}

inline void linear_backward(const Instance& inst, double dz,
                            std::vector<SparseRowGrad>& grads, double& dbias) {
  dbias += dz;
  for (size_t f = 0; f < inst.indices.size(); ++f) {
    for (int32_t idx : inst.indices[f]) *grads[f].at(idx) += dz;
  }
}

}  // namespace fis
