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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fis/data_model.hpp"
#include "fis/metrics.hpp"
#include "fis/network.hpp"
#include "fis/optim.hpp"
#include "fis/persistence.hpp"
#include "fis/rng.hpp"

namespace fis {

struct TrainSettings {
  AdamConfig adam;
  GrdaConfig grda;
  int batch_size = 2000;
  int epochs = 1;

  void validate() const {
    adam.validate();
    grda.validate();
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  }
};

enum class AlphaOpt { kFrozen, kAdam, kGrda };

struct EpochStats {
  int64_t epoch = 0;
  double train_loss = 0.0;
  double eval_auc = std::nan("");
  double eval_logloss = std::nan("");
};

// Histogram of alpha values: bin 0 counts exact zeros, bins 1..10 cover |a|
// in (0,0.1] .. (0.9,1.0], bin 11 is |a| > 1.
inline std::vector<int64_t> alpha_histogram(std::span<const double> alpha) {
  std::vector<int64_t> hist(12, 0);
  for (double a : alpha) {
    if (a == 0.0) {
      ++hist[0];
    } else {
      const double mag = std::abs(a);
      if (mag > 1.0) {
        ++hist[11];
      } else {
        ++hist[std::min(10, static_cast<int>(std::ceil(mag * 10.0)))];
      }
    }
  }
  return hist;
}

struct RunReport {
  std::string stage;
  uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  double test_auc = std::nan("");
  double test_logloss = std::nan("");
  int64_t open_pairs = 0;
  int64_t total_pairs = 0;
  int64_t open_triples = 0;
  int64_t total_triples = 0;
  std::vector<int64_t> alpha_hist;
  double wall_seconds = 0.0;

  double kept_pair_fraction() const {
    return total_pairs == 0 ? 0.0
                            : static_cast<double>(open_pairs) / total_pairs;
  }
  double kept_triple_fraction() const {
    return total_triples == 0 ? 0.0
                              : static_cast<double>(open_triples) / total_triples;
  }

  std::string text() const {
    std::ostringstream out;
    out << "fis-report v1\n";
    out << "stage " << stage << "\n";
    out << "seed " << seed << "\n";
    out << "epoch\ttrain_loss\teval_auc\teval_logloss\n";
    for (const auto& e : epochs) {
      out << e.epoch << '\t' << e.train_loss << '\t' << e.eval_auc << '\t'
          << e.eval_logloss << "\n";
    }
    out << "test_auc " << test_auc << "\n";
    out << "test_logloss " << test_logloss << "\n";
    out << "open_pairs " << open_pairs << "/" << total_pairs << "\n";
    out << "kept_pair_fraction " << kept_pair_fraction() << "\n";
    if (total_triples > 0) {
      out << "open_triples " << open_triples << "/" << total_triples << "\n";
      out << "kept_triple_fraction " << kept_triple_fraction() << "\n";
    }
    if (!alpha_hist.empty()) {
      out << "alpha_hist zero:" << alpha_hist[0];
      for (int bin = 1; bin <= 10; ++bin) {
        out << " (" << (bin - 1) / 10.0 << "," << bin / 10.0 << "]:" << alpha_hist[bin];
      }
      out << " >1:" << alpha_hist[11] << "\n";
    }
    out << "wall_seconds " << wall_seconds << "\n";
    return out.str();
  }
};

// Evaluates a model over a dataset in eval mode; returns (auc, logloss).
inline std::pair<double, double> evaluate_model(Model& model, const Dataset& data,
                                                int batch_size) {
  const int64_t n = static_cast<int64_t>(data.instances.size());
  std::vector<double> probs;
  std::vector<int> labels;
  probs.reserve(n);
  labels.reserve(n);
  for (int64_t start = 0; start < n; start += batch_size) {
    const int64_t stop = std::min(n, start + batch_size);
    MiniBatch mb{&data, {}};
    mb.rows.resize(stop - start);
    std::iota(mb.rows.begin(), mb.rows.end(), static_cast<int32_t>(start));
    ForwardCache fc = forward(model, mb, false);
    for (int b = 0; b < static_cast<int>(fc.probs.size()); ++b) {
      probs.push_back(fc.probs[b]);
      labels.push_back(mb.at(b).label);
    }
  }
  return {auc(probs, labels), logloss(probs, labels)};
}

// One-level training loop: every batch produces one gradient evaluation at
// the current (v, alpha); Adam consumes the v part and GRDA the alpha part of
// that same evaluation. Checkpoint/resume is exact because the only training
// randomness is the per-epoch shuffle, whose generator state is snapshotted
// at each epoch start.
class Trainer {
 public:
  Trainer(Model& model, const Dataset& train, const TrainSettings& ts,
          AlphaOpt pair_opt, AlphaOpt triple_opt, uint64_t seed)
      : model_(&model),
        train_(&train),
        ts_(ts),
        pair_opt_(pair_opt),
        triple_opt_(triple_opt),
        seed_(seed),
        shuffle_rng_(seed, "shuffle") {
    ts_.validate();
    if (train.instances.empty()) throw std::invalid_argument("trainer: empty dataset");
    adam_.init(model, ts_.adam);
    if (pair_opt_ == AlphaOpt::kGrda) {
      grda_pair_.init(model.alpha.pair_alpha, ts_.grda);
    }
    if (triple_opt_ == AlphaOpt::kGrda) {
      grda_triple_.init(model.alpha.triple_alpha, ts_.grda);
    }
    prepare_epoch();
  }

  int64_t n() const { return static_cast<int64_t>(train_->instances.size()); }
  int64_t batches_per_epoch() const {
    return (n() + ts_.batch_size - 1) / ts_.batch_size;
  }
  int64_t epoch() const { return epoch_; }
  bool done() const { return epoch_ >= ts_.epochs; }
  const ModelAdam& adam() const { return adam_; }
  const GrdaState& grda_pair() const { return grda_pair_; }

  // Runs one mini-batch joint step; returns false once the epoch budget is
  // exhausted. Single-row batches are skipped (BN needs >= 2 rows).
  bool step() {
    while (true) {
      if (done()) return false;
      const int64_t start = batch_index_ * ts_.batch_size;
      const int64_t stop = std::min(n(), start + ts_.batch_size);
      if (stop - start < 2 && n() > 1) {
        advance();
        continue;
      }
      MiniBatch mb{train_, {}};
      mb.rows.assign(perm_.begin() + start, perm_.begin() + stop);
      std::vector<int> labels(mb.rows.size());
      for (size_t b = 0; b < mb.rows.size(); ++b) labels[b] = mb.at(b).label;

      ForwardCache fc = forward(*model_, mb, true);
      const double loss = ce_loss_from_logits(fc.logits, labels);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("trainer: non-finite loss at epoch " +
                                 std::to_string(epoch_));
      }
      ModelGrads grads = backward(*model_, mb, fc, labels);

      adam_.step(*model_, grads, pair_opt_ == AlphaOpt::kAdam,
                 triple_opt_ == AlphaOpt::kAdam);
      if (pair_opt_ == AlphaOpt::kGrda) {
        grda_pair_.step(model_->alpha.pair_alpha, grads.alpha.pair_alpha);
      }
      if (triple_opt_ == AlphaOpt::kGrda) {
        grda_triple_.step(model_->alpha.triple_alpha, grads.alpha.triple_alpha);
      }
      loss_sum_ += loss * static_cast<double>(mb.rows.size());
      loss_count_ += static_cast<double>(mb.rows.size());
      advance();
      return true;
    }
  }

  // Runs to the end of the current epoch; returns its mean train loss.
  double run_epoch() {
    const int64_t target = epoch_;
    loss_sum_ = 0.0;
    loss_count_ = 0.0;
    while (!done() && epoch_ == target) {
      if (!step()) break;
    }
    return loss_count_ > 0.0 ? loss_sum_ / loss_count_ : std::nan("");
  }

  void save(const std::string& path, uint64_t config_hash) const {
    Checkpoint ck;
    ck.meta["config_hash"] = std::to_string(config_hash);
    ck.meta["schema"] = std::to_string(model_->schema.fingerprint());
    ck.meta["epoch"] = std::to_string(epoch_);
    ck.meta["batch_index"] = std::to_string(batch_index_);
    ck.meta["epoch_rng"] = std::to_string(epoch_start_state_);
    ck.meta["pair_opt"] = std::to_string(static_cast<int>(pair_opt_));
    ck.meta["triple_opt"] = std::to_string(static_cast<int>(triple_opt_));
    pack_model(ck, *model_);
    pack_adam(ck, adam_);
    if (pair_opt_ == AlphaOpt::kGrda) pack_grda(ck, "grda.pair", grda_pair_);
    if (triple_opt_ == AlphaOpt::kGrda) pack_grda(ck, "grda.triple", grda_triple_);
    save_checkpoint_file(ck, path);
  }

  void resume(const std::string& path, uint64_t config_hash) {
    Checkpoint ck = load_checkpoint_file(path);
    if (ck.meta_u64("config_hash") != config_hash) {
      throw std::runtime_error("checkpoint: config hash mismatch");
    }
    if (ck.meta_u64("schema") != model_->schema.fingerprint()) {
      throw std::runtime_error("checkpoint: schema fingerprint mismatch");
    }
    if (static_cast<int>(ck.meta_u64("pair_opt")) != static_cast<int>(pair_opt_) ||
        static_cast<int>(ck.meta_u64("triple_opt")) != static_cast<int>(triple_opt_)) {
      throw std::runtime_error("checkpoint: optimizer role mismatch");
    }
    unpack_model(ck, *model_);
    unpack_adam(ck, adam_);
    if (pair_opt_ == AlphaOpt::kGrda) unpack_grda(ck, "grda.pair", grda_pair_);
    if (triple_opt_ == AlphaOpt::kGrda) unpack_grda(ck, "grda.triple", grda_triple_);
    epoch_ = static_cast<int64_t>(ck.meta_u64("epoch"));
    batch_index_ = static_cast<int64_t>(ck.meta_u64("batch_index"));
    // Re-derive the epoch permutation from the snapshotted generator state;
    // the post-shuffle state is then identical to the uninterrupted run.
    shuffle_rng_.set_state(ck.meta_u64("epoch_rng"));
    if (!done()) prepare_epoch();
  }

 private:
  void prepare_epoch() {
    epoch_start_state_ = shuffle_rng_.state();
    perm_.resize(n());
    std::iota(perm_.begin(), perm_.end(), 0);
    shuffle_rng_.shuffle(perm_);
  }

  void advance() {
    ++batch_index_;
    if (batch_index_ >= batches_per_epoch()) {
      batch_index_ = 0;
      ++epoch_;
      if (!done()) prepare_epoch();
    }
  }

  Model* model_;
  const Dataset* train_;
  TrainSettings ts_;
  AlphaOpt pair_opt_;
  AlphaOpt triple_opt_;
  uint64_t seed_ = 0;

  ModelAdam adam_;
  GrdaState grda_pair_;
  GrdaState grda_triple_;
  Rng shuffle_rng_;
  uint64_t epoch_start_state_ = 0;
  std::vector<int32_t> perm_;
  int64_t epoch_ = 0;
  int64_t batch_index_ = 0;
  double loss_sum_ = 0.0;
  double loss_count_ = 0.0;
};

namespace detail {

inline uint64_t stage_seed(uint64_t seed, std::string_view stage) {
  return seed ^ Rng::fnv1a(stage);
}

inline void fill_gate_counts(const Model& model, RunReport& report) {
  report.total_pairs = pair_count(model.m());
  const GateSet learned = extract_gates(model.alpha);
  report.open_pairs = model.cfg.inter.mode == InterMode::kRetrain
                          ? model.gates.open_pairs()
                          : learned.open_pairs();
  if (model.cfg.use_triples()) {
    report.total_triples = triple_count(model.m());
    report.open_triples = model.cfg.inter.mode == InterMode::kRetrain
                              ? model.gates.open_triples()
                              : learned.open_triples();
  }
  std::vector<double> all_alpha = model.alpha.pair_alpha;
  all_alpha.insert(all_alpha.end(), model.alpha.triple_alpha.begin(),
                   model.alpha.triple_alpha.end());
  report.alpha_hist = alpha_histogram(all_alpha);
}

// Shared epoch loop: train, optionally evaluate after each epoch, and fill
// the report skeleton.
inline RunReport run_stage(Trainer& trainer, Model& model, const Dataset* test,
                           const TrainSettings& ts, const std::string& stage,
                           uint64_t seed, bool eval_each_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.stage = stage;
  report.seed = seed;
  while (!trainer.done()) {
    EpochStats es;
    es.epoch = trainer.epoch();
    es.train_loss = trainer.run_epoch();
    if (test != nullptr && eval_each_epoch) {
      auto [a, ll] = evaluate_model(model, *test, ts.batch_size);
      es.eval_auc = a;
      es.eval_logloss = ll;
    }
    report.epochs.push_back(es);
  }
  if (test != nullptr) {
    auto [a, ll] = evaluate_model(model, *test, ts.batch_size);
    report.test_auc = a;
    report.test_logloss = ll;
  }
  fill_gate_counts(model, report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace detail

// Baseline training with no architecture parameters (plain FM / FM3 / DeepFM
// / IPNN as published).
inline RunReport train_plain(Model& model, const Dataset& train, const Dataset* test,
                             const TrainSettings& ts, uint64_t seed,
                             bool eval_each_epoch = false) {
  if (model.cfg.inter.mode != InterMode::kPlain) {
    throw std::invalid_argument("train_plain: model must be in plain mode");
  }
  Trainer trainer(model, train, ts, AlphaOpt::kFrozen, AlphaOpt::kFrozen, seed);
  return detail::run_stage(trainer, model, test, ts, "plain", seed, eval_each_epoch);
}

// Search stage: joint one-level optimization, Adam on weights and GRDA on
// alpha, over the full training set. Alpha ends with exact zeros on pruned
// interactions.
inline RunReport search_stage(Model& model, const Dataset& train, const Dataset* test,
                              const TrainSettings& ts, uint64_t seed,
                              bool eval_each_epoch = false) {
  if (model.cfg.inter.mode != InterMode::kSearch) {
    throw std::invalid_argument("search_stage: model must be in search mode");
  }
  Trainer trainer(model, train, ts,
                  AlphaOpt::kGrda,
                  model.cfg.use_triples() ? AlphaOpt::kGrda : AlphaOpt::kFrozen, seed);
  return detail::run_stage(trainer, model, test, ts, "search", seed, eval_each_epoch);
}

// Retrain stage: fresh network weights, gates fixed, alpha seeded from the
// search result and trained by Adam as an attention unit.
inline RunReport retrain_stage(Model& model, const Dataset& train, const Dataset* test,
                               const TrainSettings& ts, uint64_t seed,
                               bool alpha_trainable = true,
                               bool eval_each_epoch = false) {
  if (model.cfg.inter.mode != InterMode::kRetrain) {
    throw std::invalid_argument("retrain_stage: model must be in retrain mode");
  }
  const AlphaOpt a = alpha_trainable ? AlphaOpt::kAdam : AlphaOpt::kFrozen;
  Trainer trainer(model, train, ts, a,
                  model.cfg.use_triples() ? a : AlphaOpt::kFrozen, seed);
  return detail::run_stage(trainer, model, test, ts, "retrain", seed, eval_each_epoch);
}

struct PipelineConfig {
  ModelConfig model;
  TrainSettings search;
  TrainSettings retrain;
  bool search_bn = true;
  bool retrain_bn = true;
  bool retrain_alpha = true;
  bool bn_eval_batch = false;
};

struct PipelineResult {
  InteractionManifest search_manifest;
  InteractionManifest manifest;
  RunReport search_report;
  RunReport retrain_report;
  Model model;  // final retrained model
};

// Builds a search-mode model over the schema.
inline Model make_search_model(const FieldSchema& schema, const PipelineConfig& cfg,
                               uint64_t seed) {
  ModelConfig mc = cfg.model;
  mc.inter.mode = InterMode::kSearch;
  mc.inter.bn = cfg.search_bn;
  mc.inter.bn_eval_batch = cfg.bn_eval_batch;
  Model model;
  model.init(schema, mc, detail::stage_seed(seed, "search"));
  return model;
}

// Builds a retrain-mode model with the given gates and alpha start values.
inline Model make_retrain_model(const FieldSchema& schema, const PipelineConfig& cfg,
                                const GateSet& gates, const ArchitectureParams& alpha,
                                uint64_t seed, std::string_view stage = "retrain") {
  ModelConfig mc = cfg.model;
  mc.inter.mode = InterMode::kRetrain;
  mc.inter.bn = cfg.retrain_bn;
  mc.inter.bn_eval_batch = cfg.bn_eval_batch;
  Model model;
  model.init(schema, mc, detail::stage_seed(seed, stage));
  model.gates = gates;
  model.alpha = alpha;
  // The IPNN input width depends on the open columns, so the MLP must be
  // shaped after the gates are installed.
  if (model.cfg.has_mlp()) model.init_mlp(detail::stage_seed(seed, stage));
  return model;
}

// Full two-stage pipeline over one seed.
inline PipelineResult run_pipeline(const Dataset& train, const Dataset& test,
                                   const PipelineConfig& cfg, uint64_t seed,
                                   uint64_t config_hash) {
  PipelineResult out;

  Model search_model = make_search_model(train.schema, cfg, seed);
  out.search_report = search_stage(search_model, train, &test, cfg.search, seed);
  const GateSet gates = extract_gates(search_model.alpha);
  out.search_manifest = make_manifest(search_model, gates, "search", seed, config_hash);

  out.model = make_retrain_model(train.schema, cfg, gates, search_model.alpha, seed);
  out.retrain_report =
      retrain_stage(out.model, train, &test, cfg.retrain, seed, cfg.retrain_alpha);
  out.manifest = make_manifest(out.model, out.model.gates, "retrain", seed, config_hash);
  return out;
}

// Retrains under an explicit gate set with default alpha on open entries;
// the random-selection baseline.
inline RunReport retrain_with_gates(const Dataset& train, const Dataset& test,
                                    const PipelineConfig& cfg, const GateSet& gates,
                                    uint64_t seed) {
  ArchitectureParams alpha;
  alpha.init(train.schema.field_count, cfg.model.head == Head::kFm3,
             cfg.model.alpha_init);
  Model model = make_retrain_model(train.schema, cfg, gates, alpha, seed);
  return retrain_stage(model, train, &test, cfg.retrain, seed, cfg.retrain_alpha);
}

// Third-order extension: pair gates and alphas are frozen from the completed
// second-order manifest while fresh triple alphas are searched by GRDA; the
// final combined selection is retrained from scratch.
struct ThirdOrderResult {
  InteractionManifest search_manifest;  // pair gates + triple search alphas
  InteractionManifest manifest;         // after combined retrain
  RunReport search_report;
  RunReport retrain_report;
  Model model;
};

inline ThirdOrderResult third_order_pipeline(const Dataset& train, const Dataset& test,
                                             const PipelineConfig& cfg,
                                             const InteractionManifest& second_order,
                                             uint64_t seed, uint64_t config_hash) {
  if (second_order.with_triples) {
    throw std::invalid_argument("third-order: expected a pair-only manifest");
  }
  ModelConfig mc = cfg.model;
  if (mc.head == Head::kFm) mc.head = Head::kFm3;
  mc.inter.use_triples = true;
  PipelineConfig cfg3 = cfg;
  cfg3.model = mc;

  const int m = train.schema.field_count;
  if (static_cast<int64_t>(second_order.pairs.size()) != pair_count(m)) {
    throw std::invalid_argument("third-order: manifest does not match schema");
  }

  // Triple search: pairs behave like a retrain layer (gated, fixed alpha),
  // triples start at alpha_init with all gates open and learn via GRDA.
  GateSet gates;
  gates.all_open(m, true);
  ArchitectureParams alpha;
  alpha.init(m, true, cfg.model.alpha_init);
  for (size_t c = 0; c < second_order.pairs.size(); ++c) {
    gates.pair_open[c] = second_order.pairs[c].open ? 1 : 0;
    alpha.pair_alpha[c] = second_order.pairs[c].alpha;
  }

  ThirdOrderResult out;
  Model search_model =
      make_retrain_model(train.schema, cfg3, gates, alpha, seed, "search3");
  {
    Trainer trainer(search_model, train, cfg3.search, AlphaOpt::kFrozen,
                    AlphaOpt::kGrda, seed);
    out.search_report = detail::run_stage(trainer, search_model, &test, cfg3.search,
                                          "third-order-search", seed, false);
  }
  GateSet final_gates = gates;
  const GateSet learned = extract_gates(search_model.alpha);
  final_gates.triple_open = learned.triple_open;
  out.search_manifest = make_manifest(search_model, final_gates, "third-order-search",
                                      seed, config_hash);
  ArchitectureParams final_alpha = alpha;
  final_alpha.triple_alpha = search_model.alpha.triple_alpha;

  out.model = make_retrain_model(train.schema, cfg3, final_gates, final_alpha, seed,
                                 "retrain3");
  out.retrain_report = retrain_stage(out.model, train, &test, cfg3.retrain, seed,
                                     cfg3.retrain_alpha);
  out.manifest = make_manifest(out.model, out.model.gates, "third-order", seed,
                               config_hash);
  return out;
}

// Transfers a selection manifest onto another head (IPNN or DEEPFM) and
// retrains it: the target model's interaction layer is restricted to the
// manifest's open gates.
struct TransferResult {
  RunReport report;
  Model model;
};

inline TransferResult transfer(const Dataset& train, const Dataset& test,
                               const PipelineConfig& cfg, Head target_head,
                               const InteractionManifest& manifest, uint64_t seed) {
  if (manifest.schema_fingerprint != train.schema.fingerprint()) {
    throw std::runtime_error("transfer: schema fingerprint mismatch");
  }
  ModelConfig mc = cfg.model;
  mc.head = target_head;
  mc.inter.use_triples = manifest.with_triples;
  PipelineConfig tcfg = cfg;
  tcfg.model = mc;

  const int m = train.schema.field_count;
  GateSet gates;
  gates.all_open(m, manifest.with_triples);
  ArchitectureParams alpha;
  alpha.init(m, manifest.with_triples, cfg.model.alpha_init);
  for (size_t c = 0; c < manifest.pairs.size(); ++c) {
    gates.pair_open[c] = manifest.pairs[c].open ? 1 : 0;
    alpha.pair_alpha[c] = manifest.pairs[c].alpha;
  }
  for (size_t c = 0; c < manifest.triples.size(); ++c) {
    gates.triple_open[c] = manifest.triples[c].open ? 1 : 0;
    alpha.triple_alpha[c] = manifest.triples[c].alpha;
  }

  TransferResult out;
  out.model = make_retrain_model(train.schema, tcfg, gates, alpha, seed, "transfer");
  out.report = retrain_stage(out.model, train, &test, tcfg.retrain, seed,
                             tcfg.retrain_alpha);
  return out;
}

// Per-interaction analysis row for the alpha vs statistics-AUC scatter.
struct InteractionScore {
  InteractionId id;
  bool open = false;
  double alpha = 0.0;
  double stat_auc = std::nan("");
};

inline std::vector<InteractionScore> analyze_interactions(
    const Dataset& train, const Dataset& test, const InteractionManifest& manifest) {
  std::vector<InteractionScore> rows;
  rows.reserve(manifest.pairs.size());
  for (const auto& entry : manifest.pairs) {
    InteractionScore row;
    row.id = entry.id;
    row.open = entry.open;
    row.alpha = entry.alpha;
    row.stat_auc = statistics_auc(train, test, entry.id);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fis
