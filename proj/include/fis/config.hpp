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
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/network.hpp"
#include "fis/pipeline.hpp"
#include "fis/rng.hpp"

namespace fis {

// Flat `key = value` run configuration with one [section] per concern.
// Unknown sections or keys are rejected up front.
struct RunConfig {
  // [data]
  std::string source = "synthetic";  // synthetic | file
  std::string train_path;
  std::string test_path;
  double holdout = 0.2;
  int min_count = 20;
  std::vector<int> multi_hot_fields;
  Reduce reduce = Reduce::kSum;
  std::vector<int> numeric_fields;
  int buckets = 10;
  double downsample_target = 0.0;  // 0 = off
  std::string vocab_path;

  // [synthetic]
  int syn_fields = 6;
  int syn_categories = 60;
  std::vector<InteractionId> planted_pairs = {pair_id(0, 1), pair_id(2, 5),
                                              pair_id(3, 4)};
  std::vector<InteractionId> planted_triples;
  int64_t n_train = 100000;
  int64_t n_test = 20000;
  std::string spec_file;

  // [model]
  std::string head = "fm";
  int embed_dim = 40;
  std::vector<int> mlp = {700, 700, 700, 700, 700, 1};
  bool mlp_bn = false;
  bool bn_eval_batch = false;
  double alpha_init = 0.7;
  double bn_momentum = 0.99;
  double bn_eps = 1e-5;

  // [search]
  int search_epochs = 1;
  bool search_bn = true;
  double grda_lr = 0.01;
  double grda_c = 0.005;
  double grda_mu = 0.6;

  // [retrain]
  int retrain_epochs = 1;
  bool retrain_bn = true;
  bool retrain_alpha = true;

  // [optim]
  double lr = 1e-3;
  int batch_size = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // [run]
  uint64_t seed = 1;
  std::string out_dir = "runs/out";

  PipelineConfig pipeline_config() const {
    PipelineConfig p;
    p.model.head = head_from_name(head);
    p.model.d = embed_dim;
    if (p.model.has_mlp()) p.model.mlp_layers = mlp;
    p.model.mlp_bn = mlp_bn;
    p.model.alpha_init = alpha_init;
    p.model.bn_momentum = bn_momentum;
    p.model.bn_eps = bn_eps;
    p.search.adam = {lr, beta1, beta2, adam_eps};
    p.search.grda = {grda_lr, grda_c, grda_mu};
    p.search.batch_size = batch_size;
    p.search.epochs = search_epochs;
    p.retrain = p.search;
    p.retrain.epochs = retrain_epochs;
    p.search_bn = search_bn;
    p.retrain_bn = retrain_bn;
    p.retrain_alpha = retrain_alpha;
    p.bn_eval_batch = bn_eval_batch;
    p.model.validate();
    p.search.validate();
    p.retrain.validate();
    return p;
  }

  void validate() const {
    if (source != "synthetic" && source != "file") {
      throw std::invalid_argument("config: data.source must be synthetic or file");
    }
    if (source == "file" && train_path.empty()) {
      throw std::invalid_argument("config: data.train required for file source");
    }
    if (holdout < 0.0 || holdout >= 1.0) {
      throw std::invalid_argument("config: data.holdout must be in [0,1)");
    }
    if (downsample_target < 0.0 || downsample_target >= 1.0) {
      throw std::invalid_argument("config: data.downsample_target must be in [0,1)");
    }
    if (syn_fields < 2 || syn_categories < 1 || n_train < 1 || n_test < 1) {
      throw std::invalid_argument("config: bad synthetic sizes");
    }
    for (const auto& id : planted_pairs) {
      if (id.j >= syn_fields) throw std::invalid_argument("config: planted pair out of range");
    }
    for (const auto& id : planted_triples) {
      if (id.t >= syn_fields) throw std::invalid_argument("config: planted triple out of range");
    }
    pipeline_config();  // validates model + optimizer settings
  }

  // Canonical text form; also the hashing base, so any semantic change to the
  // run flips the hash.
  std::string resolved_text() const;
  // Where artifacts land does not change what gets computed, so out_dir is
  // blanked before hashing; reruns into other directories stay compatible.
  uint64_t hash() const {
    RunConfig c = *this;
    c.out_dir.clear();
    return Rng::fnv1a(c.resolved_text());
  }
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

// "0:1,2:5" -> pair ids; "0:1:2" -> triple ids.
inline std::vector<InteractionId> parse_id_list(const std::string& v, Order order) {
  std::vector<InteractionId> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    int i = 0, j = 0, t = 0;
    if (order == Order::kPair) {
      if (std::sscanf(item.c_str(), "%d:%d", &i, &j) != 2) {
        throw std::invalid_argument("config: bad pair '" + item + "'");
      }
      out.push_back(pair_id(i, j));
    } else {
      if (std::sscanf(item.c_str(), "%d:%d:%d", &i, &j, &t) != 3) {
        throw std::invalid_argument("config: bad triple '" + item + "'");
      }
      out.push_back(triple_id(i, j, t));
    }
  }
  return out;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(v[k]);
  }
  return s;
}

inline std::string join_ids(const std::vector<InteractionId>& v) {
  std::string s;
  for (size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(v[k].i) + ':' + std::to_string(v[k].j);
    if (v[k].order == Order::kTriple) s += ':' + std::to_string(v[k].t);
  }
  return s;
}

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace cfgdetail

inline std::string RunConfig::resolved_text() const {
  using cfgdetail::format_g;
  using cfgdetail::join_ids;
  using cfgdetail::join_ints;
  std::ostringstream out;
  out << "[data]\n";
  out << "source = " << source << "\n";
  out << "train = " << train_path << "\n";
  out << "test = " << test_path << "\n";
  out << "holdout = " << format_g(holdout) << "\n";
  out << "min_count = " << min_count << "\n";
  out << "multi_hot_fields = " << join_ints(multi_hot_fields) << "\n";
  out << "reduce = " << reduce_name(reduce) << "\n";
  out << "numeric_fields = " << join_ints(numeric_fields) << "\n";
  out << "buckets = " << buckets << "\n";
  out << "downsample_target = " << format_g(downsample_target) << "\n";
  out << "vocab = " << vocab_path << "\n";
  out << "[synthetic]\n";
  out << "fields = " << syn_fields << "\n";
  out << "categories = " << syn_categories << "\n";
  out << "planted_pairs = " << join_ids(planted_pairs) << "\n";
  out << "planted_triples = " << join_ids(planted_triples) << "\n";
  out << "n_train = " << n_train << "\n";
  out << "n_test = " << n_test << "\n";
  out << "spec_file = " << spec_file << "\n";
  out << "[model]\n";
  out << "head = " << head << "\n";
  out << "embed_dim = " << embed_dim << "\n";
  out << "mlp = " << join_ints(mlp) << "\n";
  out << "mlp_bn = " << (mlp_bn ? "true" : "false") << "\n";
  out << "bn_eval_batch = " << (bn_eval_batch ? "true" : "false") << "\n";
  out << "alpha_init = " << format_g(alpha_init) << "\n";
  out << "bn_momentum = " << format_g(bn_momentum) << "\n";
  out << "bn_eps = " << format_g(bn_eps) << "\n";
  out << "[search]\n";
  out << "epochs = " << search_epochs << "\n";
  out << "bn = " << (search_bn ? "true" : "false") << "\n";
  out << "grda_lr = " << format_g(grda_lr) << "\n";
  out << "grda_c = " << format_g(grda_c) << "\n";
  out << "grda_mu = " << format_g(grda_mu) << "\n";
  out << "[retrain]\n";
  out << "epochs = " << retrain_epochs << "\n";
  out << "bn = " << (retrain_bn ? "true" : "false") << "\n";
  out << "alpha = " << (retrain_alpha ? "true" : "false") << "\n";
  out << "[optim]\n";
  out << "lr = " << format_g(lr) << "\n";
  out << "batch_size = " << batch_size << "\n";
  out << "beta1 = " << format_g(beta1) << "\n";
  out << "beta2 = " << format_g(beta2) << "\n";
  out << "eps = " << format_g(adam_eps) << "\n";
  out << "[run]\n";
  out << "seed = " << seed << "\n";
  out << "out = " << out_dir << "\n";
  return out.str();
}

// Applies one `section.key = value` assignment.
inline void apply_config_entry(RunConfig& cfg, const std::string& section,
                               const std::string& key, const std::string& value) {
  using namespace cfgdetail;
  const std::string full = section + "." + key;
  if (section == "data") {
    if (key == "source") cfg.source = value;
    else if (key == "train") cfg.train_path = value;
    else if (key == "test") cfg.test_path = value;
    else if (key == "holdout") cfg.holdout = std::stod(value);
    else if (key == "min_count") cfg.min_count = std::stoi(value);
    else if (key == "multi_hot_fields") cfg.multi_hot_fields = parse_int_list(value);
    else if (key == "reduce") cfg.reduce = reduce_from_name(value);
    else if (key == "numeric_fields") cfg.numeric_fields = parse_int_list(value);
    else if (key == "buckets") cfg.buckets = std::stoi(value);
    else if (key == "downsample_target") cfg.downsample_target = std::stod(value);
    else if (key == "vocab") cfg.vocab_path = value;
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "synthetic") {
    if (key == "fields") cfg.syn_fields = std::stoi(value);
    else if (key == "categories") cfg.syn_categories = std::stoi(value);
    else if (key == "planted_pairs") cfg.planted_pairs = parse_id_list(value, Order::kPair);
    else if (key == "planted_triples") cfg.planted_triples = parse_id_list(value, Order::kTriple);
    else if (key == "n_train") cfg.n_train = std::stoll(value);
    else if (key == "n_test") cfg.n_test = std::stoll(value);
    else if (key == "spec_file") cfg.spec_file = value;
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "model") {
    if (key == "head") cfg.head = value;
    else if (key == "embed_dim") cfg.embed_dim = std::stoi(value);
    else if (key == "mlp") cfg.mlp = parse_int_list(value);
    else if (key == "mlp_bn") cfg.mlp_bn = parse_bool(value, full);
    else if (key == "bn_eval_batch") cfg.bn_eval_batch = parse_bool(value, full);
    else if (key == "alpha_init") cfg.alpha_init = std::stod(value);
    else if (key == "bn_momentum") cfg.bn_momentum = std::stod(value);
    else if (key == "bn_eps") cfg.bn_eps = std::stod(value);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "search") {
    if (key == "epochs") cfg.search_epochs = std::stoi(value);
    else if (key == "bn") cfg.search_bn = parse_bool(value, full);
    else if (key == "grda_lr") cfg.grda_lr = std::stod(value);
    else if (key == "grda_c") cfg.grda_c = std::stod(value);
    else if (key == "grda_mu") cfg.grda_mu = std::stod(value);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "retrain") {
    if (key == "epochs") cfg.retrain_epochs = std::stoi(value);
    else if (key == "bn") cfg.retrain_bn = parse_bool(value, full);
    else if (key == "alpha") cfg.retrain_alpha = parse_bool(value, full);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "optim") {
    if (key == "lr") cfg.lr = std::stod(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "beta1") cfg.beta1 = std::stod(value);
    else if (key == "beta2") cfg.beta2 = std::stod(value);
    else if (key == "eps") cfg.adam_eps = std::stod(value);
    else throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "run") {
    if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "out") cfg.out_dir = value;
    else throw std::invalid_argument("config: unknown key " + full);
  } else {
    throw std::invalid_argument("config: unknown section [" + section + "]");
  }
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = cfgdetail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section");
      }
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = cfgdetail::trim(line.substr(0, eq));
    const std::string value = cfgdetail::trim(line.substr(eq + 1));
    if (section.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": key before any [section]");
    }
    apply_config_entry(cfg, section, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// `--set section.key=value` override.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override: expected section.key=value");
  }
  const std::string path = cfgdetail::trim(assignment.substr(0, eq));
  const std::string value = cfgdetail::trim(assignment.substr(eq + 1));
  const size_t dot = path.find('.');
  if (dot == std::string::npos) {
    throw std::invalid_argument("override: expected section.key=value");
  }
  apply_config_entry(cfg, path.substr(0, dot), path.substr(dot + 1), value);
}

}  // namespace fis
