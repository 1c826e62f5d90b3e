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

// Command-line front end: one subcommand per pipeline stage, each writing a
// self-describing run directory (config copy, reports, manifests, model
// checkpoint).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fis/config.hpp"
#include "fis/ingest.hpp"
#include "fis/metrics.hpp"
#include "fis/pipeline.hpp"
#include "fis/synthetic.hpp"

namespace {

constexpr const char* kVersion = "fis 0.1.0";

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  std::string out;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run config file (key = value text)");
  cmd->add_option("--set", opts.sets, "override: section.key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "master seed (overrides run.seed)");
  cmd->add_option("--out", opts.out, "output directory (overrides run.out)");
  cmd->add_flag("--dry-run", opts.dry_run, "validate config and print the plan only");
}

fis::RunConfig resolve_config(const CommonOpts& opts) {
  fis::RunConfig cfg;
  if (!opts.config_path.empty()) cfg = fis::load_config(opts.config_path);
  for (const std::string& assignment : opts.sets) fis::apply_override(cfg, assignment);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  cfg.validate();
  return cfg;
}

struct LoadedData {
  fis::Dataset train;
  fis::Dataset test;
  std::optional<fis::SyntheticSpec> spec;
};

fis::SyntheticPlan plan_from_config(const fis::RunConfig& cfg) {
  fis::SyntheticPlan plan;
  plan.m = cfg.syn_fields;
  plan.N = cfg.syn_categories;
  plan.planted_pairs = cfg.planted_pairs;
  plan.planted_triples = cfg.planted_triples;
  return plan;
}

LoadedData load_data(const fis::RunConfig& cfg, std::ostream& log) {
  LoadedData out;
  if (cfg.source == "synthetic") {
    fis::SyntheticSpec spec;
    if (!cfg.spec_file.empty() && std::filesystem::exists(cfg.spec_file)) {
      spec = fis::load_synthetic_spec(cfg.spec_file);
      log << "loaded synthetic spec from " << cfg.spec_file << "\n";
    } else {
      spec = fis::make_synthetic_spec(plan_from_config(cfg), cfg.seed);
    }
    auto [train, test] = fis::generate_synthetic(spec, cfg.n_train, cfg.n_test);
    out.train = std::move(train);
    out.test = std::move(test);
    out.spec = std::move(spec);
    return out;
  }

  std::vector<fis::RawRow> train_rows = fis::read_raw_file(cfg.train_path);
  std::vector<fis::RawRow> test_rows;
  if (!cfg.test_path.empty()) {
    test_rows = fis::read_raw_file(cfg.test_path,
                                   static_cast<int>(train_rows[0].tokens.size()));
  } else if (cfg.holdout > 0.0) {
    fis::Rng rng(cfg.seed, "holdout");
    rng.shuffle(train_rows);
    const size_t n_test = static_cast<size_t>(cfg.holdout * train_rows.size());
    test_rows.assign(train_rows.end() - n_test, train_rows.end());
    train_rows.resize(train_rows.size() - n_test);
  }

  fis::EncodeHints hints;
  hints.min_count = cfg.min_count;
  hints.reduce = cfg.reduce;
  hints.numeric_fields = cfg.numeric_fields;
  hints.bucket_count = cfg.buckets;
  if (!cfg.multi_hot_fields.empty()) {
    hints.multi_hot.assign(train_rows[0].tokens.size(), 0);
    for (int f : cfg.multi_hot_fields) hints.multi_hot.at(f) = 1;
  }
  fis::Encoder enc = fis::fit_encoder(train_rows, hints, &log);
  out.train = fis::encode_rows(train_rows, enc);
  if (!test_rows.empty()) out.test = fis::encode_rows(test_rows, enc);
  else out.test.schema = enc.schema;

  if (cfg.downsample_target > 0.0) {
    fis::Rng rng(cfg.seed, "downsample");
    const size_t before = out.train.instances.size();
    out.train.instances = fis::negative_downsample(out.train.instances,
                                                   cfg.downsample_target, rng, &log);
    log << "downsample: " << before << " -> " << out.train.instances.size()
        << " training rows\n";
  }
  return out;
}

std::string data_summary(const LoadedData& data) {
  std::ostringstream out;
  int64_t pos = 0;
  for (const auto& x : data.train.instances) pos += x.label;
  out << "fields " << data.train.schema.field_count << ", train "
      << data.train.instances.size() << " rows (" << pos << " positive), test "
      << data.test.instances.size() << " rows";
  return out.str();
}

std::filesystem::path prepare_out_dir(const fis::RunConfig& cfg,
                                      const std::string& command) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  fis::detail::atomic_write((dir / "config.txt").string(), cfg.resolved_text());
  std::ostringstream info;
  info << kVersion << "\n";
  info << "command " << command << "\n";
  info << "config_hash " << cfg.hash() << "\n";
  info << "seed " << cfg.seed << "\n";
  fis::detail::atomic_write((dir / "run-info.txt").string(), info.str());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  fis::detail::atomic_write(path.string(), text);
}

// Model-only checkpoint for later `eval`.
void save_model_checkpoint(const fis::Model& model, const std::filesystem::path& path,
                           uint64_t config_hash, const std::string& stage) {
  fis::Checkpoint ck;
  ck.meta["kind"] = "model";
  ck.meta["stage"] = stage;
  ck.meta["head"] = fis::head_name(model.cfg.head);
  ck.meta["mode"] = fis::inter_mode_name(model.cfg.inter.mode);
  ck.meta["config_hash"] = std::to_string(config_hash);
  ck.meta["schema"] = std::to_string(model.schema.fingerprint());
  fis::pack_model(ck, model);
  fis::save_checkpoint_file(ck, path.string());
}

fis::GateSet gates_from_manifest(const fis::InteractionManifest& man, int m) {
  fis::GateSet gates;
  gates.all_open(m, man.with_triples);
  if (static_cast<int64_t>(man.pairs.size()) != fis::pair_count(m)) {
    throw std::runtime_error("manifest does not cover the schema's pairs");
  }
  for (size_t c = 0; c < man.pairs.size(); ++c) {
    gates.pair_open[c] = man.pairs[c].open ? 1 : 0;
  }
  for (size_t c = 0; c < man.triples.size(); ++c) {
    gates.triple_open[c] = man.triples[c].open ? 1 : 0;
  }
  return gates;
}

fis::ArchitectureParams alpha_from_manifest(const fis::InteractionManifest& man,
                                            int m, double alpha_init) {
  fis::ArchitectureParams alpha;
  alpha.init(m, man.with_triples, alpha_init);
  for (size_t c = 0; c < man.pairs.size(); ++c) alpha.pair_alpha[c] = man.pairs[c].alpha;
  for (size_t c = 0; c < man.triples.size(); ++c) {
    alpha.triple_alpha[c] = man.triples[c].alpha;
  }
  return alpha;
}

void check_manifest_schema(const fis::InteractionManifest& man,
                           const fis::FieldSchema& schema) {
  if (man.schema_fingerprint != schema.fingerprint()) {
    throw std::runtime_error("manifest schema fingerprint does not match the data");
  }
}

int run_dry(const fis::RunConfig& cfg, const std::string& command) {
  std::cout << "dry run: " << command << "\n";
  std::cout << "plan: source=" << cfg.source << " head=" << cfg.head << " seed="
            << cfg.seed << " out=" << cfg.out_dir << "\n";
  std::cout << cfg.resolved_text();
  return 0;
}

int cmd_synth_gen(const CommonOpts& opts) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "synth-gen");
  auto dir = prepare_out_dir(cfg, "synth-gen");

  fis::SyntheticSpec spec = fis::make_synthetic_spec(plan_from_config(cfg), cfg.seed);
  auto [train, test] = fis::generate_synthetic(spec, cfg.n_train, cfg.n_test);
  fis::save_synthetic_spec(spec, (dir / "synthetic-spec.txt").string());

  auto to_rows = [](const fis::Dataset& d) {
    std::vector<fis::RawRow> rows;
    rows.reserve(d.instances.size());
    for (const auto& x : d.instances) {
      fis::RawRow r;
      r.label = x.label;
      r.tokens.resize(x.indices.size());
      for (size_t f = 0; f < x.indices.size(); ++f) {
        for (int32_t idx : x.indices[f]) r.tokens[f].push_back(std::to_string(idx));
      }
      rows.push_back(std::move(r));
    }
    return rows;
  };
  fis::write_raw_file((dir / "train.raw").string(), to_rows(train));
  fis::write_raw_file((dir / "test.raw").string(), to_rows(test));

  int64_t pos = 0;
  for (const auto& x : train.instances) pos += x.label;
  std::ostringstream stats;
  stats << "fields " << spec.m << "\ncategories " << spec.N << "\n";
  stats << "train_rows " << train.instances.size() << "\n";
  stats << "test_rows " << test.instances.size() << "\n";
  stats << "train_positive_ratio "
        << static_cast<double>(pos) / static_cast<double>(train.instances.size())
        << "\n";
  stats << "threshold " << spec.threshold << "\nnoise_sigma " << spec.noise_sigma
        << "\n";
  write_text(dir / "stats.txt", stats.str());
  std::cout << "synth-gen: wrote " << dir.string() << " ("
            << train.instances.size() << " train / " << test.instances.size()
            << " test rows)\n";
  return 0;
}

int cmd_ingest(const CommonOpts& opts) {
  fis::RunConfig cfg = resolve_config(opts);
  if (cfg.source != "file") {
    throw std::runtime_error("ingest: requires data.source = file");
  }
  if (opts.dry_run) return run_dry(cfg, "ingest");
  auto dir = prepare_out_dir(cfg, "ingest");

  std::ostringstream log;
  LoadedData data = load_data(cfg, log);

  std::vector<fis::RawRow> train_rows = fis::read_raw_file(cfg.train_path);
  fis::EncodeHints hints;
  hints.min_count = cfg.min_count;
  hints.reduce = cfg.reduce;
  hints.numeric_fields = cfg.numeric_fields;
  hints.bucket_count = cfg.buckets;
  fis::Encoder enc = fis::fit_encoder(train_rows, hints, &log);
  fis::save_vocab(enc.vocab, (dir / "vocab.txt").string());

  std::ostringstream report;
  report << "fis-ingest v1\n";
  report << data_summary(data) << "\n";
  report << "schema_fingerprint " << data.train.schema.fingerprint() << "\n";
  for (int f = 0; f < data.train.schema.field_count; ++f) {
    report << "field " << f << " cardinality "
           << data.train.schema.cardinalities[f] << "\n";
  }
  const std::string warnings = log.str();
  if (!warnings.empty()) report << warnings;
  write_text(dir / "ingest_report.txt", report.str());
  std::cout << "ingest: " << data_summary(data) << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "train");
  auto dir = prepare_out_dir(cfg, "train");
  LoadedData data = load_data(cfg, std::cout);
  std::cout << "train: " << data_summary(data) << "\n";

  fis::PipelineConfig pcfg = cfg.pipeline_config();
  fis::ModelConfig mc = pcfg.model;
  mc.inter.mode = fis::InterMode::kPlain;
  mc.inter.bn = false;
  fis::Model model;
  model.init(data.train.schema, mc, cfg.seed);
  fis::RunReport report = fis::train_plain(
      model, data.train, data.test.instances.empty() ? nullptr : &data.test,
      pcfg.retrain, cfg.seed, true);
  write_text(dir / "train_report.txt", report.text());
  save_model_checkpoint(model, dir / "model.ckpt", cfg.hash(), "plain");
  std::cout << report.text();
  return 0;
}

int cmd_search(const CommonOpts& opts) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "search");
  auto dir = prepare_out_dir(cfg, "search");
  LoadedData data = load_data(cfg, std::cout);
  std::cout << "search: " << data_summary(data) << "\n";

  fis::PipelineConfig pcfg = cfg.pipeline_config();
  fis::Model model = fis::make_search_model(data.train.schema, pcfg, cfg.seed);
  fis::RunReport report = fis::search_stage(
      model, data.train, data.test.instances.empty() ? nullptr : &data.test,
      pcfg.search, cfg.seed);
  fis::InteractionManifest man = fis::make_manifest(
      model, fis::extract_gates(model.alpha), "search", cfg.seed, cfg.hash());
  fis::save_manifest(man, (dir / "search_manifest.txt").string());
  write_text(dir / "search_report.txt", report.text());
  save_model_checkpoint(model, dir / "model.ckpt", cfg.hash(), "search");
  std::cout << report.text();
  return 0;
}

int cmd_retrain(const CommonOpts& opts, const std::string& manifest_path) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "retrain");
  auto dir = prepare_out_dir(cfg, "retrain");
  LoadedData data = load_data(cfg, std::cout);
  std::cout << "retrain: " << data_summary(data) << "\n";

  fis::InteractionManifest man = fis::load_manifest(manifest_path);
  check_manifest_schema(man, data.train.schema);
  fis::PipelineConfig pcfg = cfg.pipeline_config();
  const int m = data.train.schema.field_count;
  fis::Model model = fis::make_retrain_model(
      data.train.schema, pcfg, gates_from_manifest(man, m),
      alpha_from_manifest(man, m, pcfg.model.alpha_init), cfg.seed);
  fis::RunReport report = fis::retrain_stage(
      model, data.train, data.test.instances.empty() ? nullptr : &data.test,
      pcfg.retrain, cfg.seed, pcfg.retrain_alpha);
  fis::InteractionManifest out_man = fis::make_manifest(model, model.gates, "retrain",
                                                        cfg.seed, cfg.hash());
  fis::save_manifest(out_man, (dir / "manifest.txt").string());
  write_text(dir / "retrain_report.txt", report.text());
  save_model_checkpoint(model, dir / "model.ckpt", cfg.hash(), "retrain");
  std::cout << report.text();
  return 0;
}

int cmd_pipeline(const CommonOpts& opts) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "pipeline");
  auto dir = prepare_out_dir(cfg, "pipeline");
  LoadedData data = load_data(cfg, std::cout);
  std::cout << "pipeline: " << data_summary(data) << "\n";

  fis::PipelineResult result = fis::run_pipeline(data.train, data.test,
                                                 cfg.pipeline_config(), cfg.seed,
                                                 cfg.hash());
  fis::save_manifest(result.search_manifest, (dir / "search_manifest.txt").string());
  fis::save_manifest(result.manifest, (dir / "manifest.txt").string());
  write_text(dir / "search_report.txt", result.search_report.text());
  write_text(dir / "retrain_report.txt", result.retrain_report.text());
  save_model_checkpoint(result.model, dir / "model.ckpt", cfg.hash(), "retrain");
  std::cout << result.search_report.text();
  std::cout << result.retrain_report.text();
  return 0;
}

int cmd_third_order(const CommonOpts& opts, const std::string& manifest_path) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "third-order");
  auto dir = prepare_out_dir(cfg, "third-order");
  LoadedData data = load_data(cfg, std::cout);
  std::cout << "third-order: " << data_summary(data) << "\n";

  fis::InteractionManifest second = fis::load_manifest(manifest_path);
  check_manifest_schema(second, data.train.schema);
  fis::ThirdOrderResult result = fis::third_order_pipeline(
      data.train, data.test, cfg.pipeline_config(), second, cfg.seed, cfg.hash());
  fis::save_manifest(result.search_manifest,
                     (dir / "third_search_manifest.txt").string());
  fis::save_manifest(result.manifest, (dir / "manifest.txt").string());
  write_text(dir / "third_search_report.txt", result.search_report.text());
  write_text(dir / "third_retrain_report.txt", result.retrain_report.text());
  save_model_checkpoint(result.model, dir / "model.ckpt", cfg.hash(), "third-order");
  std::cout << result.retrain_report.text();
  return 0;
}

int cmd_transfer(const CommonOpts& opts, const std::string& manifest_path,
                 const std::string& head) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "transfer");
  auto dir = prepare_out_dir(cfg, "transfer");
  LoadedData data = load_data(cfg, std::cout);
  std::cout << "transfer: " << data_summary(data) << "\n";

  fis::InteractionManifest man = fis::load_manifest(manifest_path);
  // The target head decides whether an MLP shape applies, so the pipeline
  // settings are derived from a config carrying that head.
  fis::RunConfig target_cfg = cfg;
  target_cfg.head = head;
  fis::TransferResult result = fis::transfer(data.train, data.test,
                                             target_cfg.pipeline_config(),
                                             fis::head_from_name(head), man, cfg.seed);
  write_text(dir / "transfer_report.txt", result.report.text());
  save_model_checkpoint(result.model, dir / "model.ckpt", cfg.hash(), "transfer");
  std::cout << result.report.text();
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_path,
             const std::string& mode) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "eval");
  auto dir = prepare_out_dir(cfg, "eval");
  LoadedData data = load_data(cfg, std::cout);
  if (data.test.instances.empty()) throw std::runtime_error("eval: no test data");

  fis::Checkpoint ck = fis::load_checkpoint_file(checkpoint_path);
  if (ck.meta_u64("schema") != data.train.schema.fingerprint()) {
    throw std::runtime_error("eval: checkpoint schema does not match the data");
  }
  // The checkpoint remembers what it is; the config only fills in the rest.
  fis::RunConfig model_cfg = cfg;
  if (ck.meta.count("head")) model_cfg.head = ck.meta_at("head");
  std::string eval_mode = mode;
  if (eval_mode.empty()) {
    eval_mode = ck.meta.count("mode") ? ck.meta_at("mode") : "retrain";
  }
  fis::PipelineConfig pcfg = model_cfg.pipeline_config();
  fis::ModelConfig mc = pcfg.model;
  if (eval_mode == "plain") {
    mc.inter.mode = fis::InterMode::kPlain;
    mc.inter.bn = false;
  } else if (eval_mode == "search") {
    mc.inter.mode = fis::InterMode::kSearch;
    mc.inter.bn = pcfg.search_bn;
  } else if (eval_mode == "retrain") {
    mc.inter.mode = fis::InterMode::kRetrain;
    mc.inter.bn = pcfg.retrain_bn;
  } else {
    throw std::runtime_error("eval: mode must be plain, search, or retrain");
  }
  mc.inter.bn_eval_batch = pcfg.bn_eval_batch;
  const auto& gp = ck.get("gates.pair");
  const auto& gt = ck.get("gates.triple");
  mc.inter.use_triples = mc.head == fis::Head::kFm3 || !gt.empty();

  fis::Model model;
  model.init(data.train.schema, mc, cfg.seed);
  model.gates.pair_open.assign(gp.begin(), gp.end());
  model.gates.triple_open.assign(gt.begin(), gt.end());
  if (model.cfg.has_mlp()) model.init_mlp(cfg.seed);
  fis::unpack_model(ck, model);

  auto [auc_value, logloss_value] = fis::evaluate_model(model, data.test,
                                                        cfg.batch_size);
  std::ostringstream report;
  report << "fis-eval v1\n";
  report << "checkpoint " << checkpoint_path << "\n";
  report << "rows " << data.test.instances.size() << "\n";
  report << "auc " << auc_value << "\n";
  report << "logloss " << logloss_value << "\n";
  write_text(dir / "eval_report.txt", report.str());
  std::cout << report.str();
  return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::string& manifest_path,
                const std::string& manifest_b_path) {
  fis::RunConfig cfg = resolve_config(opts);
  if (opts.dry_run) return run_dry(cfg, "analyze");
  auto dir = prepare_out_dir(cfg, "analyze");
  LoadedData data = load_data(cfg, std::cout);
  if (data.test.instances.empty()) throw std::runtime_error("analyze: no test data");

  fis::InteractionManifest man = fis::load_manifest(manifest_path);
  check_manifest_schema(man, data.train.schema);
  std::vector<fis::InteractionScore> rows =
      fis::analyze_interactions(data.train, data.test, man);

  std::ostringstream table, scatter;
  table << "interaction\topen\talpha\tstatistics_auc\n";
  for (const auto& row : rows) {
    table << row.id.str() << '\t' << (row.open ? 1 : 0) << '\t' << row.alpha << '\t'
          << row.stat_auc << "\n";
    scatter << row.alpha << ' ' << row.stat_auc << "\n";
  }
  write_text(dir / "analysis.txt", table.str());
  write_text(dir / "scatter.txt", scatter.str());

  std::vector<double> alphas;
  for (const auto& entry : man.pairs) alphas.push_back(entry.alpha);
  for (const auto& entry : man.triples) alphas.push_back(entry.alpha);
  const std::vector<int64_t> hist = fis::alpha_histogram(alphas);
  std::ostringstream hist_text;
  for (size_t bin = 0; bin < hist.size(); ++bin) {
    hist_text << bin << ' ' << hist[bin] << "\n";
  }
  write_text(dir / "alpha_hist.txt", hist_text.str());

  if (!manifest_b_path.empty()) {
    fis::InteractionManifest other = fis::load_manifest(manifest_b_path);
    check_manifest_schema(other, data.train.schema);
    if (other.pairs.size() != man.pairs.size()) {
      throw std::runtime_error("analyze: manifests cover different pair sets");
    }
    std::vector<double> a, b;
    for (size_t c = 0; c < man.pairs.size(); ++c) {
      a.push_back(man.pairs[c].alpha);
      b.push_back(other.pairs[c].alpha);
    }
    const double r = fis::pearson(a, b);
    std::ostringstream stability;
    stability << "alpha_pearson " << r << "\n";
    write_text(dir / "stability.txt", stability.str());
    std::cout << "alpha_pearson " << r << "\n";
  }
  std::cout << table.str();
  return 0;
}

int cmd_report(const CommonOpts& opts, std::string run_dir) {
  if (run_dir.empty()) {
    fis::RunConfig cfg = resolve_config(opts);
    run_dir = cfg.out_dir;
  }
  const std::filesystem::path dir(run_dir);
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("report: no such run directory: " + run_dir);
  }
  bool found = false;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    const bool is_report = name.size() > 11 &&
                           name.substr(name.size() - 11) == "_report.txt";
    if (!is_report && name != "stats.txt" && name != "run-info.txt") continue;
    std::ifstream in(path);
    if (!in) continue;
    std::cout << "== " << name << " ==\n" << in.rdbuf() << "\n";
    found = true;
  }
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    if (name.find("manifest") == std::string::npos) continue;
    fis::InteractionManifest man = fis::load_manifest(path.string());
    int64_t open_pairs = 0, open_triples = 0;
    for (const auto& e : man.pairs) open_pairs += e.open ? 1 : 0;
    for (const auto& e : man.triples) open_triples += e.open ? 1 : 0;
    std::cout << "== " << name << " ==\nstage " << man.stage << ", open pairs "
              << open_pairs << "/" << man.pairs.size();
    if (man.with_triples) {
      std::cout << ", open triples " << open_triples << "/" << man.triples.size();
    }
    std::cout << "\n\n";
    found = true;
  }
  if (!found) throw std::runtime_error("report: no reports under " + run_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factorization-model feature interaction selection toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOpts opts;
  std::string manifest_path, manifest_b_path, head = "ipnn";
  std::string checkpoint_path, mode, run_dir;

  auto* synth_gen = app.add_subcommand("synth-gen", "generate a synthetic dataset");
  add_common(synth_gen, opts);

  auto* ingest = app.add_subcommand("ingest", "fit vocabulary and report data stats");
  add_common(ingest, opts);

  auto* train = app.add_subcommand("train", "train a plain baseline model");
  add_common(train, opts);

  auto* search = app.add_subcommand("search", "search stage: learn sparse gates");
  add_common(search, opts);

  auto* retrain = app.add_subcommand("retrain", "retrain under a manifest's gates");
  add_common(retrain, opts);
  retrain->add_option("--manifest", manifest_path, "selection manifest")->required();

  auto* pipeline = app.add_subcommand("pipeline", "search then retrain");
  add_common(pipeline, opts);

  auto* third = app.add_subcommand("third-order", "extend a pair manifest to triples");
  add_common(third, opts);
  third->add_option("--manifest", manifest_path, "second-order manifest")->required();

  auto* transfer = app.add_subcommand("transfer",
                                      "retrain another head under a manifest");
  add_common(transfer, opts);
  transfer->add_option("--manifest", manifest_path, "selection manifest")->required();
  transfer->add_option("--head", head, "target head (fm, fm3, deepfm, ipnn)");

  auto* eval = app.add_subcommand("eval", "evaluate a saved model checkpoint");
  add_common(eval, opts);
  eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval->add_option("--mode", mode,
                   "interaction mode override (defaults to the checkpoint's)");

  auto* analyze = app.add_subcommand("analyze",
                                     "per-interaction alpha vs statistics-AUC table");
  add_common(analyze, opts);
  analyze->add_option("--manifest", manifest_path, "selection manifest")->required();
  analyze->add_option("--manifest-b", manifest_b_path,
                      "second manifest for cross-seed alpha correlation");

  auto* report = app.add_subcommand("report", "print the reports of a run directory");
  add_common(report, opts);
  report->add_option("--run", run_dir, "run directory (defaults to run.out)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_gen->parsed()) return cmd_synth_gen(opts);
    if (ingest->parsed()) return cmd_ingest(opts);
    if (train->parsed()) return cmd_train(opts);
    if (search->parsed()) return cmd_search(opts);
    if (retrain->parsed()) return cmd_retrain(opts, manifest_path);
    if (pipeline->parsed()) return cmd_pipeline(opts);
    if (third->parsed()) return cmd_third_order(opts, manifest_path);
    if (transfer->parsed()) return cmd_transfer(opts, manifest_path, head);
    if (eval->parsed()) return cmd_eval(opts, checkpoint_path, mode);
    if (analyze->parsed()) return cmd_analyze(opts, manifest_path, manifest_b_path);
    if (report->parsed()) return cmd_report(opts, run_dir);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
