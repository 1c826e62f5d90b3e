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

#include <zlib.h>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/network.hpp"
#include "fis/optim.hpp"

namespace fis {

// The persisted outcome of a selection stage: per interaction, its gate and
// final alpha, transferable across model heads over the same schema.
struct ManifestEntry {
  InteractionId id;
  bool open = false;
  double alpha = 0.0;
};

struct InteractionManifest {
  uint64_t schema_fingerprint = 0;
  bool with_triples = false;
  std::string stage;  // search | retrain | third-order
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  std::vector<ManifestEntry> pairs;    // canonical order, complete
  std::vector<ManifestEntry> triples;  // canonical order when with_triples

  int64_t open_pairs() const {
    int64_t n = 0;
    for (const auto& e : pairs) n += e.open;
    return n;
  }
  int64_t open_triples() const {
    int64_t n = 0;
    for (const auto& e : triples) n += e.open;
    return n;
  }
};

// The gate column is passed explicitly because the model's own gate set is
// not always the selection: a search-mode model keeps every gate open while
// exploring, and its selection lives in the final alpha instead.
inline InteractionManifest make_manifest(const Model& model, const GateSet& gates,
                                         const std::string& stage, uint64_t seed,
                                         uint64_t config_hash) {
  InteractionManifest man;
  man.schema_fingerprint = model.schema.fingerprint();
  man.with_triples = model.cfg.use_triples();
  man.stage = stage;
  man.seed = seed;
  man.config_hash = config_hash;
  const auto pair_ids = enumerate_interactions(model.m(), Order::kPair);
  for (size_t c = 0; c < pair_ids.size(); ++c) {
    man.pairs.push_back({pair_ids[c], gates.pair_open[c] != 0,
                         model.alpha.pair_alpha[c]});
  }
  if (man.with_triples) {
    const auto triple_ids = enumerate_interactions(model.m(), Order::kTriple);
    for (size_t c = 0; c < triple_ids.size(); ++c) {
      man.triples.push_back({triple_ids[c], gates.triple_open[c] != 0,
                             model.alpha.triple_alpha[c]});
    }
  }
  return man;
}

namespace detail {

// %.17g round-trips IEEE-754 doubles exactly through text.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void atomic_write(const std::string& path, const std::string& payload,
                         bool binary = false) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write: " + tmp);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline std::string manifest_text(const InteractionManifest& man) {
  std::ostringstream out;
  out << "fis-manifest v1\n";
  out << "schema " << std::hex << man.schema_fingerprint << std::dec << "\n";
  out << "coverage " << (man.with_triples ? "pair+triple" : "pair") << "\n";
  out << "stage " << man.stage << "\n";
  out << "seed " << man.seed << "\n";
  out << "config " << std::hex << man.config_hash << std::dec << "\n";
  out << "ids " << man.pairs.size() + man.triples.size() << "\n";
  for (const auto& e : man.pairs) {
    out << e.id.str() << '\t' << (e.open ? 1 : 0) << '\t'
        << detail::format_double(e.alpha) << "\n";
  }
  for (const auto& e : man.triples) {
    out << e.id.str() << '\t' << (e.open ? 1 : 0) << '\t'
        << detail::format_double(e.alpha) << "\n";
  }
  return out.str();
}

inline void save_manifest(const InteractionManifest& man, const std::string& path) {
  detail::atomic_write(path, manifest_text(man), false);
}

inline InteractionManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::string magic, version, word, coverage;
  in >> magic >> version;
  if (magic != "fis-manifest" || version != "v1") {
    throw std::runtime_error("unrecognized manifest header in " + path);
  }
  InteractionManifest man;
  in >> word >> std::hex >> man.schema_fingerprint >> std::dec;
  in >> word >> coverage;
  man.with_triples = coverage == "pair+triple";
  if (!man.with_triples && coverage != "pair") {
    throw std::runtime_error("manifest: unknown coverage " + coverage);
  }
  in >> word >> man.stage;
  in >> word >> man.seed;
  in >> word >> std::hex >> man.config_hash >> std::dec;
  size_t ids = 0;
  in >> word >> ids;
  std::getline(in, word);  // finish the ids line
  for (size_t k = 0; k < ids; ++k) {
    std::string line;
    if (!std::getline(in, line) || line.empty()) {
      throw std::runtime_error("manifest: truncated id list in " + path);
    }
    std::istringstream ls(line);
    std::string id_text, alpha_text;
    int open = 0;
    std::getline(ls, id_text, '\t');
    ls >> open;
    ls >> alpha_text;
    int i = 0, j = 0, t = -1;
    if (std::sscanf(id_text.c_str(), "%d,%d,%d", &i, &j, &t) == 3) {
      man.triples.push_back({triple_id(i, j, t), open != 0, std::stod(alpha_text)});
    } else if (std::sscanf(id_text.c_str(), "%d,%d", &i, &j) == 2) {
      man.pairs.push_back({pair_id(i, j), open != 0, std::stod(alpha_text)});
    } else {
      throw std::runtime_error("manifest: bad id '" + id_text + "'");
    }
  }
  return man;
}

// Installs manifest gates and alphas into a model over the same schema.
inline void apply_manifest(Model& model, const InteractionManifest& man) {
  if (man.schema_fingerprint != model.schema.fingerprint()) {
    throw std::runtime_error("manifest: schema fingerprint mismatch");
  }
  if (static_cast<int64_t>(man.pairs.size()) != pair_count(model.m())) {
    throw std::runtime_error("manifest: pair id count mismatch");
  }
  for (size_t c = 0; c < man.pairs.size(); ++c) {
    model.gates.pair_open[c] = man.pairs[c].open ? 1 : 0;
    model.alpha.pair_alpha[c] = man.pairs[c].alpha;
  }
  if (model.cfg.use_triples()) {
    if (man.with_triples) {
      if (static_cast<int64_t>(man.triples.size()) != triple_count(model.m())) {
        throw std::runtime_error("manifest: triple id count mismatch");
      }
      for (size_t c = 0; c < man.triples.size(); ++c) {
        model.gates.triple_open[c] = man.triples[c].open ? 1 : 0;
        model.alpha.triple_alpha[c] = man.triples[c].alpha;
      }
    }
  } else if (man.with_triples) {
    throw std::runtime_error("manifest: triple coverage but model has no triples");
  }
}

// Checkpoints: a text header naming every tensor, then one little-endian
// float64 blob, then a CRC32 + byte-length trailer. Headers stay diffable;
// the trailer catches truncation and corruption.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, std::vector<double>>> tensors;

  void add(const std::string& name, const std::vector<double>& data) {
    tensors.emplace_back(name, data);
  }
  void add_scalar(const std::string& name, double v) {
    tensors.emplace_back(name, std::vector<double>{v});
  }

  const std::vector<double>& get(const std::string& name) const {
    for (const auto& [n, data] : tensors) {
      if (n == name) return data;
    }
    throw std::runtime_error("checkpoint: missing tensor " + name);
  }
  double get_scalar(const std::string& name) const {
    const auto& v = get(name);
    if (v.size() != 1) throw std::runtime_error("checkpoint: " + name + " not scalar");
    return v[0];
  }
  const std::string& meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error("checkpoint: missing meta " + key);
    return it->second;
  }
  uint64_t meta_u64(const std::string& key) const {
    return std::stoull(meta_at(key));
  }
};

inline void save_checkpoint_file(const Checkpoint& ck, const std::string& path) {
  std::ostringstream out;
  out << "fis-checkpoint v1\n";
  for (const auto& [key, value] : ck.meta) out << "meta " << key << ' ' << value << "\n";
  size_t total = 0;
  for (const auto& [name, data] : ck.tensors) {
    out << "tensor " << name << ' ' << data.size() << "\n";
    total += data.size();
  }
  out << "data " << total << "\n";

  std::string payload;
  payload.reserve(total * sizeof(double));
  for (const auto& [name, data] : ck.tensors) {
    const char* bytes = reinterpret_cast<const char*>(data.data());
    payload.append(bytes, data.size() * sizeof(double));
  }
  const uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  const uint64_t length = payload.size();

  std::string blob = out.str();
  blob += payload;
  char trailer[12];
  std::memcpy(trailer, &crc, 4);
  std::memcpy(trailer + 4, &length, 8);
  blob.append(trailer, 12);
  detail::atomic_write(path, blob, true);
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "fis-checkpoint v1") {
    throw std::runtime_error("unrecognized checkpoint header in " + path);
  }
  Checkpoint ck;
  std::vector<std::pair<std::string, size_t>> shapes;
  size_t total = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (kind == "tensor") {
      std::string name;
      size_t n = 0;
      ls >> name >> n;
      shapes.emplace_back(name, n);
    } else if (kind == "data") {
      ls >> total;
      break;
    } else {
      throw std::runtime_error("checkpoint: unexpected header line '" + line + "'");
    }
  }
  std::string payload(total * sizeof(double), '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  char trailer[12];
  in.read(trailer, 12);
  if (!in || in.gcount() != 12) {
    throw std::runtime_error("checkpoint: truncated file " + path);
  }
  uint32_t crc_stored = 0;
  uint64_t length_stored = 0;
  std::memcpy(&crc_stored, trailer, 4);
  std::memcpy(&length_stored, trailer + 4, 8);
  if (length_stored != payload.size()) {
    throw std::runtime_error("checkpoint: length mismatch in " + path);
  }
  const uint32_t crc_actual = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  if (crc_actual != crc_stored) {
    throw std::runtime_error("checkpoint: checksum mismatch in " + path);
  }
  size_t offset = 0;
  for (const auto& [name, n] : shapes) {
    std::vector<double> data(n);
    std::memcpy(data.data(), payload.data() + offset * sizeof(double),
                n * sizeof(double));
    ck.tensors.emplace_back(name, std::move(data));
    offset += n;
  }
  if (offset != total) throw std::runtime_error("checkpoint: tensor sizes disagree");
  return ck;
}

// Model <-> checkpoint tensor packing. Optimizer and trainer state ride along
// in the same tensor namespace.
inline void pack_model(Checkpoint& ck, const Model& model) {
  for (int f = 0; f < model.m(); ++f) {
    ck.add("emb." + std::to_string(f), model.emb.fields[f]);
    ck.add("lin." + std::to_string(f), model.lin.fields[f]);
  }
  ck.add_scalar("bias", model.lin.bias);
  ck.add("alpha.pair", model.alpha.pair_alpha);
  ck.add("alpha.triple", model.alpha.triple_alpha);
  std::vector<double> gates_pair(model.gates.pair_open.begin(),
                                 model.gates.pair_open.end());
  std::vector<double> gates_triple(model.gates.triple_open.begin(),
                                   model.gates.triple_open.end());
  ck.add("gates.pair", gates_pair);
  ck.add("gates.triple", gates_triple);
  ck.add("bn.pair.mean", model.bn_pairs.running_mean);
  ck.add("bn.pair.var", model.bn_pairs.running_var);
  ck.add("bn.triple.mean", model.bn_triples.running_mean);
  ck.add("bn.triple.var", model.bn_triples.running_var);
  for (size_t l = 0; l < model.mlp.size(); ++l) {
    ck.add("mlp.W." + std::to_string(l), model.mlp[l].W);
    ck.add("mlp.b." + std::to_string(l), model.mlp[l].b);
  }
  for (size_t l = 0; l < model.mlp_bn.size(); ++l) {
    ck.add("mlp.bn.mean." + std::to_string(l), model.mlp_bn[l].running_mean);
    ck.add("mlp.bn.var." + std::to_string(l), model.mlp_bn[l].running_var);
  }
}

inline void unpack_model(const Checkpoint& ck, Model& model) {
  for (int f = 0; f < model.m(); ++f) {
    const auto& emb = ck.get("emb." + std::to_string(f));
    if (emb.size() != model.emb.fields[f].size()) {
      throw std::runtime_error("checkpoint: embedding table " + std::to_string(f) +
                               " does not match the configured shape");
    }
    model.emb.fields[f] = emb;
    model.lin.fields[f] = ck.get("lin." + std::to_string(f));
  }
  model.lin.bias = ck.get_scalar("bias");
  model.alpha.pair_alpha = ck.get("alpha.pair");
  model.alpha.triple_alpha = ck.get("alpha.triple");
  const auto& gp = ck.get("gates.pair");
  const auto& gt = ck.get("gates.triple");
  model.gates.pair_open.assign(gp.begin(), gp.end());
  model.gates.triple_open.assign(gt.begin(), gt.end());
  model.bn_pairs.running_mean = ck.get("bn.pair.mean");
  model.bn_pairs.running_var = ck.get("bn.pair.var");
  model.bn_triples.running_mean = ck.get("bn.triple.mean");
  model.bn_triples.running_var = ck.get("bn.triple.var");
  for (size_t l = 0; l < model.mlp.size(); ++l) {
    const auto& W = ck.get("mlp.W." + std::to_string(l));
    const auto& b = ck.get("mlp.b." + std::to_string(l));
    if (static_cast<int64_t>(W.size()) !=
            static_cast<int64_t>(model.mlp[l].in) * model.mlp[l].out ||
        b.size() != static_cast<size_t>(model.mlp[l].out)) {
      throw std::runtime_error("checkpoint: mlp layer " + std::to_string(l) +
                               " does not match the configured shape");
    }
    model.mlp[l].W = W;
    model.mlp[l].b = b;
  }
  for (size_t l = 0; l < model.mlp_bn.size(); ++l) {
    model.mlp_bn[l].running_mean = ck.get("mlp.bn.mean." + std::to_string(l));
    model.mlp_bn[l].running_var = ck.get("mlp.bn.var." + std::to_string(l));
  }
}

inline void pack_adam(Checkpoint& ck, const ModelAdam& adam) {
  ck.meta["adam_t"] = std::to_string(adam.t);
  auto put = [&ck](const std::string& name, const AdamTensor& t) {
    ck.add(name + ".m", t.m);
    ck.add(name + ".v", t.v);
  };
  for (size_t f = 0; f < adam.emb.size(); ++f) {
    put("adam.emb." + std::to_string(f), adam.emb[f]);
    put("adam.lin." + std::to_string(f), adam.lin[f]);
  }
  put("adam.bias", adam.bias);
  for (size_t l = 0; l < adam.mlp_W.size(); ++l) {
    put("adam.mlp.W." + std::to_string(l), adam.mlp_W[l]);
    put("adam.mlp.b." + std::to_string(l), adam.mlp_b[l]);
  }
  put("adam.alpha.pair", adam.alpha_pair);
  put("adam.alpha.triple", adam.alpha_triple);
}

inline void unpack_adam(const Checkpoint& ck, ModelAdam& adam) {
  adam.t = static_cast<int64_t>(ck.meta_u64("adam_t"));
  auto take = [&ck](const std::string& name, AdamTensor& t) {
    t.m = ck.get(name + ".m");
    t.v = ck.get(name + ".v");
  };
  for (size_t f = 0; f < adam.emb.size(); ++f) {
    take("adam.emb." + std::to_string(f), adam.emb[f]);
    take("adam.lin." + std::to_string(f), adam.lin[f]);
  }
  take("adam.bias", adam.bias);
  for (size_t l = 0; l < adam.mlp_W.size(); ++l) {
    take("adam.mlp.W." + std::to_string(l), adam.mlp_W[l]);
    take("adam.mlp.b." + std::to_string(l), adam.mlp_b[l]);
  }
  take("adam.alpha.pair", adam.alpha_pair);
  take("adam.alpha.triple", adam.alpha_triple);
}

inline void pack_grda(Checkpoint& ck, const std::string& name, const GrdaState& g) {
  ck.meta[name + "_t"] = std::to_string(g.t);
  ck.add(name + ".alpha0", g.alpha0);
  ck.add(name + ".acc", g.accumulator);
}

inline void unpack_grda(const Checkpoint& ck, const std::string& name, GrdaState& g) {
  g.t = static_cast<int64_t>(ck.meta_u64(name + "_t"));
  g.alpha0 = ck.get(name + ".alpha0");
  g.accumulator = ck.get(name + ".acc");
}

}  // namespace fis
