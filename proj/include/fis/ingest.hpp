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
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/rng.hpp"

namespace fis {

// Raw file format, one instance per line (UTF-8, TAB and ':' reserved):
//
//   label<TAB>0:token<TAB>1:tokenA,tokenB<TAB>...
//
// Multi-hot tokens are comma-separated. Every field must be present.
struct RawRow {
  int label = 0;
  std::vector<std::vector<std::string>> tokens;  // per field
};

inline RawRow parse_raw_line(const std::string& line, int expected_fields) {
  RawRow row;
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= line.size()) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      parts.push_back(line.substr(start));
      break;
    }
    parts.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (parts.size() < 2) {
    throw std::runtime_error("raw row: expected label and at least one field: " + line);
  }
  if (parts[0] != "0" && parts[0] != "1") {
    throw std::runtime_error("raw row: label must be 0 or 1, got '" + parts[0] + "'");
  }
  row.label = parts[0] == "1" ? 1 : 0;

  const int m = expected_fields > 0 ? expected_fields
                                    : static_cast<int>(parts.size()) - 1;
  row.tokens.assign(m, {});
  std::vector<bool> seen(m, false);
  for (size_t p = 1; p < parts.size(); ++p) {
    const std::string& part = parts[p];
    size_t colon = part.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("raw row: field entry without ':': " + part);
    }
    int f = -1;
    try {
      f = std::stoi(part.substr(0, colon));
    } catch (const std::exception&) {
      throw std::runtime_error("raw row: bad field id in: " + part);
    }
    if (f < 0 || f >= m) {
      throw std::runtime_error("raw row: field id out of range: " + part);
    }
    if (seen[f]) throw std::runtime_error("raw row: duplicate field " + std::to_string(f));
    seen[f] = true;
    std::string tok;
    std::stringstream ss(part.substr(colon + 1));
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) throw std::runtime_error("raw row: empty token in: " + part);
      row.tokens[f].push_back(tok);
    }
    if (row.tokens[f].empty()) {
      throw std::runtime_error("raw row: field with no token: " + part);
    }
  }
  for (int f = 0; f < m; ++f) {
    if (!seen[f]) {
      throw std::runtime_error("raw row: missing field " + std::to_string(f));
    }
  }
  return row;
}

inline void for_each_raw_row(const std::string& path, int expected_fields,
                             const std::function<void(const RawRow&)>& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open raw file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    fn(parse_raw_line(line, expected_fields));
  }
}

inline std::vector<RawRow> read_raw_file(const std::string& path,
                                         int expected_fields = 0) {
  std::vector<RawRow> rows;
  for_each_raw_row(path, expected_fields, [&](const RawRow& r) { rows.push_back(r); });
  if (rows.empty()) throw std::runtime_error("raw file is empty: " + path);
  return rows;
}

inline void write_raw_file(const std::string& path, const std::vector<RawRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write raw file: " + path);
  for (const RawRow& r : rows) {
    out << r.label;
    for (size_t f = 0; f < r.tokens.size(); ++f) {
      out << '\t' << f << ':';
      for (size_t k = 0; k < r.tokens[f].size(); ++k) {
        if (k) out << ',';
        out << r.tokens[f][k];
      }
    }
    out << '\n';
  }
}

// Per-field token -> dense index map. Tokens with training frequency below
// min_count share the field's dummy index (the last index of the field).
// Dense indices are assigned by descending frequency, ties broken by token
// byte order.
struct VocabMap {
  int min_count = 20;
  std::vector<std::unordered_map<std::string, int32_t>> token_to_index;
  std::vector<int32_t> dummy_index;

  int field_count() const { return static_cast<int>(dummy_index.size()); }
  int64_t cardinality(int f) const { return dummy_index[f] + 1; }

  int32_t encode(int f, const std::string& token) const {
    const auto& map = token_to_index[f];
    auto it = map.find(token);
    return it == map.end() ? dummy_index[f] : it->second;
  }
};

inline VocabMap build_vocab(const std::vector<RawRow>& rows, int field_count,
                            int min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  if (rows.empty()) throw std::invalid_argument("build_vocab: empty input");

  VocabMap vocab;
  vocab.min_count = min_count;
  vocab.token_to_index.resize(field_count);
  vocab.dummy_index.resize(field_count);

  for (int f = 0; f < field_count; ++f) {
    std::map<std::string, int64_t> freq;  // ordered: byte-order tie-break for free
    for (const RawRow& r : rows) {
      for (const std::string& tok : r.tokens[f]) ++freq[tok];
    }
    std::vector<std::pair<std::string, int64_t>> kept;
    for (const auto& [tok, n] : freq) {
      if (n >= min_count) kept.emplace_back(tok, n);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second > b.second;  // descending frequency; stable keeps byte order
    });
    for (size_t i = 0; i < kept.size(); ++i) {
      vocab.token_to_index[f].emplace(kept[i].first, static_cast<int32_t>(i));
    }
    vocab.dummy_index[f] = static_cast<int32_t>(kept.size());
  }
  return vocab;
}

// Persisted as: one "fields" line, one cardinality line per field, then the
// token lines `field<TAB>token<TAB>index` sorted by (field, index, token).
inline void save_vocab(const VocabMap& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  out << "fields\t" << v.field_count() << "\tmin_count\t" << v.min_count << "\n";
  for (int f = 0; f < v.field_count(); ++f) {
    out << "field\t" << f << "\tcardinality\t" << v.cardinality(f)
        << "\tdummy\t" << v.dummy_index[f] << "\n";
  }
  for (int f = 0; f < v.field_count(); ++f) {
    std::vector<std::pair<int32_t, std::string>> entries;
    for (const auto& [tok, idx] : v.token_to_index[f]) entries.emplace_back(idx, tok);
    std::sort(entries.begin(), entries.end());
    for (const auto& [idx, tok] : entries) {
      out << f << '\t' << tok << '\t' << idx << "\n";
    }
  }
}

inline VocabMap load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);
  std::string word;
  int fields = 0;
  VocabMap v;
  in >> word >> fields >> word >> v.min_count;
  if (fields < 1) throw std::runtime_error("vocab file: bad field count");
  v.token_to_index.resize(fields);
  v.dummy_index.resize(fields);
  for (int k = 0; k < fields; ++k) {
    int f = 0;
    int64_t card = 0;
    int32_t dummy = 0;
    in >> word >> f >> word >> card >> word >> dummy;
    v.dummy_index[f] = dummy;
  }
  int f = 0;
  std::string tok;
  int32_t idx = 0;
  while (in >> f >> tok >> idx) {
    v.token_to_index[f].emplace(tok, idx);
  }
  return v;
}

// Equal-frequency bucket boundaries fit on training values. A value equal to
// a boundary goes to the lower bucket.
struct Bucketizer {
  std::vector<double> upper;  // bucket k covers v <= upper[k]; last bucket open
  bool constant_column = false;

  int bucket_count() const { return static_cast<int>(upper.size()) + 1; }

  int32_t assign(double v) const {
    for (size_t k = 0; k < upper.size(); ++k) {
      if (v <= upper[k]) return static_cast<int32_t>(k);
    }
    return static_cast<int32_t>(upper.size());
  }
};

inline Bucketizer fit_buckets(std::vector<double> values, int bucket_count,
                              std::ostream* warnings = nullptr) {
  if (bucket_count < 2) throw std::invalid_argument("fit_buckets: bucket_count must be >= 2");
  if (values.empty()) throw std::invalid_argument("fit_buckets: empty input");
  std::sort(values.begin(), values.end());
  Bucketizer b;
  if (values.front() == values.back()) {
    b.constant_column = true;
    if (warnings) *warnings << "warning: constant numeric column collapses to one bucket\n";
    return b;  // no boundaries: everything lands in bucket 0
  }
  const size_t n = values.size();
  for (int k = 1; k < bucket_count; ++k) {
    size_t pos = static_cast<size_t>(
        std::ceil(static_cast<double>(n) * k / bucket_count));
    if (pos == 0) pos = 1;
    b.upper.push_back(values[pos - 1]);
  }
  return b;
}

inline std::vector<int32_t> bucketize_numeric(const std::vector<double>& values,
                                              int bucket_count,
                                              std::ostream* warnings = nullptr) {
  Bucketizer b = fit_buckets(values, bucket_count, warnings);
  std::vector<int32_t> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(b.assign(v));
  return out;
}

// Keep every positive; keep each negative with the probability that makes the
// expected positive ratio equal target_pos_ratio. Already at or above target:
// pass-through with a warning.
inline std::vector<Instance> negative_downsample(const std::vector<Instance>& in,
                                                 double target_pos_ratio, Rng& rng,
                                                 std::ostream* warnings = nullptr) {
  if (target_pos_ratio <= 0.0 || target_pos_ratio >= 1.0) {
    throw std::invalid_argument("downsample: target ratio must be in (0,1)");
  }
  int64_t pos = 0;
  for (const Instance& x : in) pos += x.label;
  if (pos == 0) throw std::invalid_argument("downsample: need at least one positive");
  const int64_t neg = static_cast<int64_t>(in.size()) - pos;

  const double keep_prob =
      static_cast<double>(pos) * (1.0 - target_pos_ratio) /
      (target_pos_ratio * static_cast<double>(neg));
  if (neg == 0 || keep_prob >= 1.0) {
    if (warnings) *warnings << "warning: positive ratio already at or above target; passing through\n";
    return in;
  }
  std::vector<Instance> out;
  out.reserve(in.size());
  for (const Instance& x : in) {
    if (x.label == 1 || rng.uniform() < keep_prob) out.push_back(x);
  }
  return out;
}

// Hints for turning raw rows into instances.
struct EncodeHints {
  int min_count = 20;
  std::vector<uint8_t> multi_hot;      // per field; empty = all one-hot
  Reduce reduce = Reduce::kSum;
  std::vector<int> numeric_fields;     // bucketized instead of vocab-mapped
  int bucket_count = 10;
};

struct Encoder {
  VocabMap vocab;
  std::vector<Bucketizer> buckets;  // indexed by field; empty for categorical
  FieldSchema schema;

  Instance encode(const RawRow& row) const {
    Instance x;
    x.label = row.label;
    x.indices.resize(schema.field_count);
    for (int f = 0; f < schema.field_count; ++f) {
      for (const std::string& tok : row.tokens[f]) {
        int32_t idx;
        if (f < static_cast<int>(buckets.size()) && !buckets[f].upper.empty()) {
          idx = buckets[f].assign(std::stod(tok));
        } else if (f < static_cast<int>(buckets.size()) && buckets[f].constant_column) {
          idx = 0;
        } else {
          idx = vocab.encode(f, tok);
        }
        x.indices[f].push_back(idx);
      }
    }
    return x;
  }
};

// Fit vocabulary and bucket boundaries on training rows only.
inline Encoder fit_encoder(const std::vector<RawRow>& train_rows,
                           const EncodeHints& hints,
                           std::ostream* warnings = nullptr) {
  if (train_rows.empty()) throw std::invalid_argument("fit_encoder: empty input");
  const int m = static_cast<int>(train_rows[0].tokens.size());

  Encoder enc;
  std::vector<uint8_t> numeric(m, 0);
  for (int f : hints.numeric_fields) {
    if (f < 0 || f >= m) throw std::invalid_argument("fit_encoder: numeric field out of range");
    numeric[f] = 1;
  }

  enc.vocab = build_vocab(train_rows, m, hints.min_count);
  enc.buckets.resize(m);
  for (int f = 0; f < m; ++f) {
    if (!numeric[f]) continue;
    std::vector<double> values;
    values.reserve(train_rows.size());
    for (const RawRow& r : train_rows) {
      if (r.tokens[f].size() != 1) {
        throw std::invalid_argument("fit_encoder: numeric field must be single-valued");
      }
      values.push_back(std::stod(r.tokens[f][0]));
    }
    enc.buckets[f] = fit_buckets(values, hints.bucket_count, warnings);
  }

  enc.schema.field_count = m;
  enc.schema.multi_hot = hints.multi_hot.empty() ? std::vector<uint8_t>(m, 0)
                                                 : hints.multi_hot;
  enc.schema.multi_hot_reduce = hints.reduce;
  enc.schema.cardinalities.resize(m);
  for (int f = 0; f < m; ++f) {
    enc.schema.cardinalities[f] =
        numeric[f] ? enc.buckets[f].bucket_count() : enc.vocab.cardinality(f);
  }
  enc.schema.validate();
  return enc;
}

inline Dataset encode_rows(const std::vector<RawRow>& rows, const Encoder& enc) {
  Dataset d;
  d.schema = enc.schema;
  d.instances.reserve(rows.size());
  for (const RawRow& r : rows) {
    Instance x = enc.encode(r);
    validate_instance(x, d.schema);
    d.instances.push_back(std::move(x));
  }
  return d;
}

}  // namespace fis
