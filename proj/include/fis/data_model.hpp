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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fis/rng.hpp"

namespace fis {

// How a multi-valued field combines the embeddings of its active values.
enum class Reduce { kSum, kAverage };

// Interaction arity.
enum class Order { kPair, kTriple };

inline const char* reduce_name(Reduce r) {
  return r == Reduce::kSum ? "sum" : "average";
}

inline Reduce reduce_from_name(const std::string& s) {
  if (s == "sum") return Reduce::kSum;
  if (s == "average") return Reduce::kAverage;
  throw std::invalid_argument("unknown reduce mode: " + s);
}

// Layout of a multi-field categorical dataset: m fields, each with its own
// vocabulary size and one-hot/multi-hot flag.
struct FieldSchema {
  int field_count = 0;                  // m
  std::vector<int64_t> cardinalities;   // n_i per field
  std::vector<uint8_t> multi_hot;       // 1 if the field is multivalent
  Reduce multi_hot_reduce = Reduce::kSum;

  void validate() const {
    if (field_count < 2) {
      throw std::invalid_argument("schema: field_count must be >= 2");
    }
    if (static_cast<int>(cardinalities.size()) != field_count ||
        static_cast<int>(multi_hot.size()) != field_count) {
      throw std::invalid_argument(
          "schema: cardinalities and multi_hot must have field_count entries");
    }
    for (int64_t n : cardinalities) {
      if (n < 1) throw std::invalid_argument("schema: cardinality must be >= 1");
    }
  }

  // Stable identity of the layout. Manifests and checkpoints refuse to load
  // against a schema with a different fingerprint.
  uint64_t fingerprint() const {
    std::string canon = "m=" + std::to_string(field_count) + ";n=";
    for (int64_t n : cardinalities) canon += std::to_string(n) + ",";
    canon += ";mh=";
    for (uint8_t b : multi_hot) canon += b ? '1' : '0';
    canon += ";reduce=";
    canon += reduce_name(multi_hot_reduce);
    return Rng::fnv1a(canon);
  }

  static FieldSchema one_hot(std::vector<int64_t> cards) {
    FieldSchema s;
    s.field_count = static_cast<int>(cards.size());
    s.cardinalities = std::move(cards);
    s.multi_hot.assign(s.field_count, 0);
    return s;
  }
};

// One labeled example: the active value indices of every field.
struct Instance {
  std::vector<std::vector<int32_t>> indices;  // per field; singleton if one-hot
  int label = 0;                              // {0,1}
};

inline void validate_instance(const Instance& x, const FieldSchema& s) {
  if (static_cast<int>(x.indices.size()) != s.field_count) {
    throw std::invalid_argument("instance: must carry exactly field_count entries");
  }
  if (x.label != 0 && x.label != 1) {
    throw std::invalid_argument("instance: label must be 0 or 1");
  }
  for (int f = 0; f < s.field_count; ++f) {
    const auto& idx = x.indices[f];
    if (!s.multi_hot[f] && idx.size() != 1) {
      throw std::invalid_argument("instance: one-hot field must carry exactly one index");
    }
    if (idx.empty()) {
      throw std::invalid_argument("instance: field with no active index");
    }
    for (int32_t v : idx) {
      if (v < 0 || v >= s.cardinalities[f]) {
        throw std::out_of_range("instance: index out of range for field " +
                                std::to_string(f));
      }
    }
  }
}

struct Dataset {
  FieldSchema schema;
  std::vector<Instance> instances;

  size_t size() const { return instances.size(); }
};

// A view over rows of a dataset. Batch statistics (and thus batch
// normalization) need size >= 2.
struct MiniBatch {
  const Dataset* data = nullptr;
  std::vector<int32_t> rows;

  int size() const { return static_cast<int>(rows.size()); }
  const Instance& at(int b) const { return data->instances[rows[b]]; }
};

inline MiniBatch full_batch(const Dataset& d) {
  MiniBatch mb;
  mb.data = &d;
  mb.rows.resize(d.size());
  for (size_t i = 0; i < d.size(); ++i) mb.rows[i] = static_cast<int32_t>(i);
  return mb;
}

// Identifier of one pairwise or triple interaction, field indices strictly
// increasing. The enumeration order below is the canonical index space shared
// by alpha vectors, gate sets and manifests.
struct InteractionId {
  Order order = Order::kPair;
  int i = 0, j = 0, t = -1;

  friend bool operator==(const InteractionId&, const InteractionId&) = default;

  std::string str() const {
    std::string s = std::to_string(i) + "," + std::to_string(j);
    if (order == Order::kTriple) s += "," + std::to_string(t);
    return s;
  }
};

inline InteractionId pair_id(int i, int j) { return {Order::kPair, i, j, -1}; }
inline InteractionId triple_id(int i, int j, int t) {
  return {Order::kTriple, i, j, t};
}

inline int64_t pair_count(int m) { return static_cast<int64_t>(m) * (m - 1) / 2; }
inline int64_t triple_count(int m) {
  return static_cast<int64_t>(m) * (m - 1) * (m - 2) / 6;
}

// Lexicographic enumeration: (0,1),(0,2),...,(m-2,m-1) for pairs and the
// analogous ordering for triples. Deterministic by construction.
inline std::vector<InteractionId> enumerate_interactions(int m, Order order) {
  if (m < 2) throw std::invalid_argument("enumerate: need at least two fields");
  std::vector<InteractionId> out;
  if (order == Order::kPair) {
    out.reserve(static_cast<size_t>(pair_count(m)));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) out.push_back(pair_id(i, j));
  } else {
    out.reserve(static_cast<size_t>(triple_count(m)));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int t = j + 1; t < m; ++t) out.push_back(triple_id(i, j, t));
  }
  return out;
}

inline std::vector<InteractionId> enumerate_interactions(const FieldSchema& s,
                                                         Order order) {
  s.validate();
  return enumerate_interactions(s.field_count, order);
}

// Position of (i,j) in the canonical pair enumeration.
inline int pair_index(int m, int i, int j) {
  return i * m - i * (i + 1) / 2 + (j - i - 1);
}

}  // namespace fis
