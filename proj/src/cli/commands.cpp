// Copyright 2026 The CLEAR Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clear/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clear/checkpoint.hpp"
#include "clear/diagnostics.hpp"
#include "clear/errors.hpp"
#include "clear/hash.hpp"
#include "clear/matrix_io.hpp"
#include "clear/run_config.hpp"
#include "clear/synthetic.hpp"

namespace clear::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void write_json(const fs::path& path, const ordered_json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

/// The run identity: everything but the output location.
ordered_json run_identity(const RunConfig& cfg) {
  ordered_json j = to_json(cfg);
  j.erase("output_dir");
  return j;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  data::SyntheticSpec spec;
  std::string preference = "specific_only";
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* c = app.add_subcommand("synth", "Generate a synthetic dataset with planted cross-modal redundancy");
  c->add_option("--out", a.out, "Output directory")->required();
  auto& s = a.spec;
  c->add_option("--seed", s.seed, "Generator seed")->capture_default_str();
  c->add_option("--users", s.num_users)->capture_default_str();
  c->add_option("--items", s.num_items)->capture_default_str();
  c->add_option("--dim-v", s.dim_v)->capture_default_str();
  c->add_option("--dim-t", s.dim_t)->capture_default_str();
  c->add_option("--shared-rank", s.shared_rank)->capture_default_str();
  c->add_option("--specific-rank", s.specific_rank)->capture_default_str();
  c->add_option("--shared-strength", s.shared_strength)->capture_default_str();
  c->add_option("--preference", a.preference)
      ->check(CLI::IsMember({"specific_only", "mixed"}))
      ->capture_default_str();
  c->add_option("--shared-weight", s.shared_weight)->capture_default_str();
  c->add_option("--per-user", s.interactions_per_user, "Interactions per user")->capture_default_str();
  c->add_option("--noise", s.noise)->capture_default_str();
  c->add_option("--gumbel-scale", s.gumbel_scale)->capture_default_str();
}

int cmd_synth(SynthArgs& a, std::ostream& out) {
  a.spec.preference =
      a.preference == "mixed" ? data::PreferenceSource::kMixed : data::PreferenceSource::kSpecificOnly;
  try {
    a.spec.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  const auto generated = data::generate_synthetic(a.spec);
  const fs::path dir = prepare_dir(a.out);
  io::save_matrix(dir / "raw_v.clrf", generated.raw_v);
  io::save_matrix(dir / "raw_t.clrf", generated.raw_t);
  data::save_interactions(dir / "interactions.tsv", generated.interactions);

  const auto& s = a.spec;
  ordered_json manifest;
  manifest["name"] = "synthetic";
  manifest["users"] = s.num_users;
  manifest["items"] = s.num_items;
  manifest["interactions"] = generated.interactions.size();
  manifest["id_policy"] = "numeric";
  manifest["generator"] = {{"seed", s.seed},
                           {"dim_v", s.dim_v},
                           {"dim_t", s.dim_t},
                           {"shared_rank", s.shared_rank},
                           {"specific_rank", s.specific_rank},
                           {"shared_strength", s.shared_strength},
                           {"preference", a.preference},
                           {"shared_weight", s.shared_weight},
                           {"interactions_per_user", s.interactions_per_user},
                           {"noise", s.noise},
                           {"gumbel_scale", s.gumbel_scale}};
  ordered_json sums;
  for (const char* name : {"raw_v.clrf", "raw_t.clrf", "interactions.tsv"}) {
    sums[name] = util::sha256_file(dir / name);
  }
  manifest["sha256"] = sums;
  write_json(dir / "manifest.json", manifest);
  out << "wrote " << generated.interactions.size() << " interactions for " << s.num_users << " users and "
      << s.num_items << " items to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------- run options

struct RunOverrides {
  std::string config;
  std::optional<std::string> data_dir;
  std::optional<std::string> dataset_name;
  std::optional<std::size_t> core_filter;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> rank_k;
  std::optional<double> lambda;
  std::optional<std::size_t> tau;
  bool no_projection = false;
  std::optional<std::string> rank_mode;
  std::optional<double> energy_threshold;
  bool center = false;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> layers;
  std::optional<double> lr;
  std::optional<double> gamma;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> patience;
  std::optional<double> dropout;
  std::optional<std::size_t> knn_k;
  std::optional<double> graph_alpha;
};

void add_run_options(CLI::App* c, RunOverrides& o) {
  c->add_option("--config", o.config, "JSON run config (flags override its values)");
  c->add_option("--data", o.data_dir, "Dataset directory");
  c->add_option("--dataset-name", o.dataset_name, "Dataset name (known names have their statistics checked)");
  c->add_option("--core-filter", o.core_filter, "k-core filter threshold (0 disables)");
  c->add_option("--split-seed", o.split_seed);
  c->add_option("--out", o.out, "Output directory");
  c->add_option("--seed", o.seed, "Training seed");
  c->add_option("--epochs", o.epochs, "Maximum epochs");
  c->add_option("--k", o.rank_k, "Redundancy rank");
  c->add_option("--lambda", o.lambda, "Projection strength in [0, 1]");
  c->add_option("--tau", o.tau, "Projector refresh interval in epochs");
  c->add_flag("--no-projection", o.no_projection, "Disable the redundancy projection entirely");
  c->add_option("--rank-mode", o.rank_mode)->check(CLI::IsMember({"fixed", "dynamic_ratio"}));
  c->add_option("--energy-threshold", o.energy_threshold);
  c->add_flag("--center", o.center, "Center features before projecting");
  c->add_option("--dim", o.dim, "Embedding width");
  c->add_option("--layers", o.layers, "Propagation layers");
  c->add_option("--lr", o.lr);
  c->add_option("--gamma", o.gamma, "L2 regularization weight");
  c->add_option("--batch-size", o.batch_size);
  c->add_option("--patience", o.patience, "Early-stopping patience in epochs");
  c->add_option("--dropout", o.dropout, "Edge dropout rate");
  c->add_option("--knn-k", o.knn_k, "Neighbours per item in the item-item graph");
  c->add_option("--graph-alpha", o.graph_alpha, "Visual weight of the item-item graph and fusion mix");
}

RunConfig resolve_config(const RunOverrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  auto& t = cfg.train;
  auto& r = t.redundancy;
  if (o.data_dir) cfg.data.dir = *o.data_dir;
  if (o.dataset_name) cfg.data.name = *o.dataset_name;
  if (o.core_filter) cfg.data.core_filter = *o.core_filter;
  if (o.split_seed) cfg.data.split_seed = *o.split_seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.seed) t.seed = *o.seed;
  if (o.epochs) t.max_epochs = *o.epochs;
  if (o.rank_k) r.rank_k = *o.rank_k;
  if (o.lambda) r.strength_lambda = *o.lambda;
  if (o.tau) r.refresh_interval_tau = *o.tau;
  if (o.no_projection) r.enabled = false;
  if (o.rank_mode) {
    r.rank_mode = *o.rank_mode == "fixed" ? redundancy::RankMode::kFixed : redundancy::RankMode::kDynamicRatio;
  }
  if (o.energy_threshold) r.energy_threshold = *o.energy_threshold;
  if (o.center) r.center_before_project = true;
  if (o.dim) t.dim = *o.dim;
  if (o.layers) t.layers = *o.layers;
  if (o.lr) t.lr = *o.lr;
  if (o.gamma) t.gamma = *o.gamma;
  if (o.batch_size) t.batch_size = *o.batch_size;
  if (o.patience) t.early_stop_patience = *o.patience;
  if (o.dropout) t.edge_dropout = *o.dropout;
  if (o.knn_k) t.knn_k = *o.knn_k;
  if (o.graph_alpha) t.graph_alpha = *o.graph_alpha;
  cfg.validate();
  return cfg;
}

struct RunOutcome {
  train::TrainResult result;
  eval::EvalReport test;
};

RunOutcome train_and_test(const RunConfig& cfg, const RunData& run, std::ostream* log) {
  const train::TrainingInputs inputs{&run.dataset, &run.raw_v, &run.raw_t};
  auto on_epoch = [&](const train::EpochLog& e) {
    if (log == nullptr) return;
    ordered_json j;
    j["event"] = "epoch";
    j["epoch"] = e.epoch;
    j["loss"] = e.loss;
    j["val_recall@20"] = e.val_recall;
    j["val_ndcg@20"] = e.val_ndcg;
    j["rank_k"] = e.rank_k;
    j["lambda"] = e.strength_lambda;
    j["refreshed"] = e.refreshed;
    j["frobenius_ratio"] = e.frobenius_ratio;
    *log << j.dump() << '\n';
  };
  RunOutcome outcome{train::train(inputs, cfg.train, on_epoch), {}};
  const auto graphs = train::inference_graphs(run.dataset, run.raw_v, run.raw_t, cfg.train);
  outcome.test = train::evaluate(outcome.result.state, outcome.result.projectors, inputs, graphs, cfg.train,
                                 eval::Target::kTest);
  return outcome;
}

// ---------------------------------------------------------------- train

int cmd_train(const RunOverrides& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const RunData run = load_run_data(cfg.data);
  const fs::path dir = prepare_dir(cfg.output_dir);
  const ordered_json identity = run_identity(cfg);

  std::ofstream log(dir / "train_log.jsonl", std::ios::trunc);
  if (!log) throw DataError("cannot write " + (dir / "train_log.jsonl").string());
  {
    ordered_json header;
    header["event"] = "config";
    header["config"] = identity;
    header["input_hash"] = run.input_hash;
    header["users"] = run.dataset.num_users;
    header["items"] = run.dataset.num_items;
    header["train_interactions"] = run.dataset.train.size();
    log << header.dump() << '\n';
  }
  RunOutcome outcome;
  try {
    outcome = train_and_test(cfg, run, &log);
  } catch (const NumericalError& e) {
    ordered_json abort;
    abort["event"] = "abort";
    abort["reason"] = e.what();
    log << abort.dump() << '\n';
    throw;
  }
  const ordered_json test_json = eval::to_json(outcome.test);
  {
    ordered_json fin;
    fin["event"] = "final";
    fin["best_epoch"] = outcome.result.best_epoch;
    fin["best_val_recall@20"] = outcome.result.best_val_recall;
    fin["final_frobenius_ratio"] = outcome.result.final_frobenius_ratio;
    fin["test"] = test_json;
    log << fin.dump() << '\n';
  }
  log.close();

  checkpoint::Checkpoint ckpt{outcome.result.state, outcome.result.projectors, json::object()};
  ckpt.metadata["config"] = identity;
  ckpt.metadata["input_hash"] = run.input_hash;
  ckpt.metadata["best_epoch"] = outcome.result.best_epoch;
  ckpt.metadata["final_frobenius_ratio"] = outcome.result.final_frobenius_ratio;
  ckpt.metadata["eval_test"] = test_json;
  checkpoint::save_checkpoint(dir / "checkpoint.clrc", ckpt);
  write_json(dir / "eval_test.json", test_json);
  write_json(dir / "resolved_config.json", to_json(cfg));

  out << "best epoch " << outcome.result.best_epoch << "  val Recall@20 " << fmt(outcome.result.best_val_recall)
      << "\n";
  for (const auto& [k, m] : outcome.test.metrics) {
    out << "test Recall@" << k << " " << fmt(m.recall) << "  NDCG@" << k << " " << fmt(m.ndcg) << "\n";
  }
  out << "cross-covariance Frobenius ratio " << fmt(outcome.result.final_frobenius_ratio) << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::optional<std::string> data_dir;
  std::optional<std::string> out;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  c->add_option("--checkpoint", a.checkpoint)->required();
  c->add_option("--data", a.data_dir, "Dataset directory (defaults to the one recorded in the checkpoint)");
  c->add_option("--out", a.out, "Write the report JSON here");
}

struct LoadedRun {
  checkpoint::Checkpoint ckpt;
  RunConfig cfg;
  RunData run;
};

LoadedRun load_checkpoint_run(const std::string& path, const std::optional<std::string>& data_dir) {
  LoadedRun lr{checkpoint::load_checkpoint(path), {}, {}};
  if (!lr.ckpt.metadata.contains("config")) throw FormatError("checkpoint " + path + " carries no run config");
  lr.cfg = run_config_from_json(lr.ckpt.metadata.at("config"));
  if (data_dir) lr.cfg.data.dir = *data_dir;
  lr.run = load_run_data(lr.cfg.data);
  const std::string recorded = lr.ckpt.metadata.value("input_hash", std::string{});
  if (recorded != lr.run.input_hash) {
    throw DataError("dataset content hash " + lr.run.input_hash + " differs from the checkpoint's " + recorded);
  }
  return lr;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedRun lr = load_checkpoint_run(a.checkpoint, a.data_dir);
  const train::TrainingInputs inputs{&lr.run.dataset, &lr.run.raw_v, &lr.run.raw_t};
  const auto graphs = train::inference_graphs(lr.run.dataset, lr.run.raw_v, lr.run.raw_t, lr.cfg.train);
  const auto report =
      train::evaluate(lr.ckpt.state, lr.ckpt.projectors, inputs, graphs, lr.cfg.train, eval::Target::kTest);

  ordered_json j = eval::to_json(report);
  if (lr.ckpt.metadata.contains("eval_test")) {
    const auto saved = eval::eval_report_from_json(lr.ckpt.metadata.at("eval_test"));
    double dev = 0.0;
    for (const auto& [k, m] : report.metrics) {
      const auto it = saved.metrics.find(k);
      if (it == saved.metrics.end()) {
        dev = std::numeric_limits<double>::infinity();
        continue;
      }
      dev = std::max({dev, std::abs(m.recall - it->second.recall), std::abs(m.ndcg - it->second.ndcg)});
    }
    j["max_deviation_from_saved"] = dev;
  }
  if (a.out) io::write_file(*a.out, j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- project

struct ProjectArgs {
  std::string features_v;
  std::string features_t;
  std::size_t rank_k = 4;
  double lambda = 0.9;
  std::string rank_mode = "fixed";
  double energy_threshold = 0.5;
  bool center = false;
  std::string out;
};

void add_project(CLI::App& app, ProjectArgs& a) {
  auto* c = app.add_subcommand("project", "Remove the shared cross-modal subspace from two feature matrices");
  c->add_option("--features-v", a.features_v, "Visual features (CLRF)")->required();
  c->add_option("--features-t", a.features_t, "Textual features (CLRF)")->required();
  c->add_option("--k", a.rank_k)->capture_default_str();
  c->add_option("--lambda", a.lambda)->capture_default_str();
  c->add_option("--rank-mode", a.rank_mode)->check(CLI::IsMember({"fixed", "dynamic_ratio"}))->capture_default_str();
  c->add_option("--energy-threshold", a.energy_threshold)->capture_default_str();
  c->add_flag("--center", a.center, "Center features before projecting and restore the means afterwards");
  c->add_option("--out", a.out, "Output directory")->required();
}

redundancy::RedundancyConfig projection_config(std::size_t k, double lambda, const std::string& mode,
                                               double energy, bool center, std::size_t dim) {
  redundancy::RedundancyConfig r;
  r.rank_k = k;
  r.strength_lambda = lambda;
  r.rank_mode = mode == "fixed" ? redundancy::RankMode::kFixed : redundancy::RankMode::kDynamicRatio;
  r.energy_threshold = energy;
  r.center_before_project = center;
  r.validate(dim);
  return r;
}

void require_same_shape(const DenseMatrix& v, const DenseMatrix& t) {
  if (v.rows() != t.rows() || v.cols() != t.cols()) {
    throw DimensionError("feature matrices must share a shape, got " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()) + " and " + std::to_string(t.rows()) + "x" +
                         std::to_string(t.cols()));
  }
}

int cmd_project(const ProjectArgs& a, std::ostream& out) {
  const DenseMatrix v = io::load_matrix(a.features_v);
  const DenseMatrix t = io::load_matrix(a.features_t);
  require_same_shape(v, t);
  const auto cfg = projection_config(a.rank_k, a.lambda, a.rank_mode, a.energy_threshold, a.center, v.cols());
  const auto pair = redundancy::fit_projectors(v, t, cfg);
  const auto [pv, pt] = redundancy::project_features(v, t, pair, cfg);
  const auto report = diagnostics::spectrum_report(v, t, pair, cfg);

  const fs::path dir = prepare_dir(a.out);
  io::save_matrix(dir / "projected_v.clrf", pv);
  io::save_matrix(dir / "projected_t.clrf", pt);
  ordered_json j = diagnostics::to_json(report);
  j["center_before_project"] = a.center;
  j["input_hash"] = util::sha256_hex(util::sha256_file(a.features_v) + util::sha256_file(a.features_t));
  write_json(dir / "spectrum.json", j);
  out << "rank " << report.rank_k << "  lambda " << fmt(report.strength_lambda) << "  Frobenius ratio "
      << fmt(report.frobenius_ratio) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::optional<std::string> features_v;
  std::optional<std::string> features_t;
  std::optional<std::string> checkpoint;
  std::optional<std::string> data_dir;
  std::vector<std::size_t> ks = DiagnosticsConfig{}.overlap_ks;
  std::size_t anchors = 0;
  std::size_t directions = DiagnosticsConfig{}.swd_directions;
  std::uint64_t seed = DiagnosticsConfig{}.seed;
  std::size_t rank_k = 4;
  double lambda = 0.9;
  std::size_t bins = 50;
  bool export_points = false;
  std::string out;
};

void add_diagnose(CLI::App& app, DiagnoseArgs& a) {
  auto* c = app.add_subcommand("diagnose", "Redundancy diagnostics for raw features or a trained checkpoint");
  auto* fv = c->add_option("--features-v", a.features_v, "Visual features (CLRF)");
  auto* ft = c->add_option("--features-t", a.features_t, "Textual features (CLRF)");
  auto* ck = c->add_option("--checkpoint", a.checkpoint, "Checkpoint whose encoded features are analysed");
  c->add_option("--data", a.data_dir, "Dataset directory for --checkpoint");
  fv->needs(ft);
  ft->needs(fv);
  ck->excludes(fv)->excludes(ft);
  c->add_option("--ks", a.ks, "Overlap cutoffs")->delimiter(',')->capture_default_str();
  c->add_option("--anchors", a.anchors, "Anchor items for the overlap curve (0 = all)")->capture_default_str();
  c->add_option("--directions", a.directions, "Sliced Wasserstein directions")->capture_default_str();
  c->add_option("--seed", a.seed)->capture_default_str();
  c->add_option("--k", a.rank_k, "Redundancy rank when fitting projectors on raw features")->capture_default_str();
  c->add_option("--lambda", a.lambda, "Projection strength when fitting on raw features")->capture_default_str();
  c->add_option("--bins", a.bins, "Histogram bins")->capture_default_str();
  c->add_flag("--export-points", a.export_points, "Also write 2-D principal coordinates per modality");
  c->add_option("--out", a.out, "Output directory")->required();
}

void write_points(const fs::path& path, const DenseMatrix& coords) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "item,pc1,pc2\n";
  for (std::size_t r = 0; r < coords.rows(); ++r) {
    f << r << ',' << fmt(coords(r, 0)) << ',' << (coords.cols() > 1 ? fmt(coords(r, 1)) : "0") << '\n';
  }
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.features_v && !a.checkpoint) throw ConfigError("diagnose needs --features-v/--features-t or --checkpoint");
  if (a.directions == 0) throw ConfigError("--directions must be positive");

  DenseMatrix before_v, before_t, after_v, after_t;
  bool have_after = false;
  diagnostics::SpectrumReport spectrum;
  ordered_json source;
  if (a.checkpoint) {
    const LoadedRun lr = load_checkpoint_run(*a.checkpoint, a.data_dir);
    std::tie(before_v, before_t) = model::encode(lr.run.raw_v, lr.run.raw_t, lr.ckpt.state);
    const auto& rcfg = lr.cfg.train.redundancy;
    std::tie(after_v, after_t) = redundancy::project_features(before_v, before_t, lr.ckpt.projectors, rcfg);
    spectrum = diagnostics::spectrum_report(before_v, before_t, lr.ckpt.projectors, rcfg);
    have_after = true;
    source = {{"checkpoint", *a.checkpoint}, {"input_hash", lr.run.input_hash}};
  } else {
    before_v = io::load_matrix(*a.features_v);
    before_t = io::load_matrix(*a.features_t);
    if (before_v.rows() != before_t.rows()) {
      throw DimensionError("feature matrices disagree on the item count");
    }
    if (before_v.cols() == before_t.cols()) {
      const auto rcfg = projection_config(a.rank_k, a.lambda, "fixed", 0.5, false, before_v.cols());
      const auto pair = redundancy::fit_projectors(before_v, before_t, rcfg);
      std::tie(after_v, after_t) = redundancy::project_features(before_v, before_t, pair, rcfg);
      spectrum = diagnostics::spectrum_report(before_v, before_t, pair, rcfg);
      have_after = true;
    } else {
      err << "note: feature widths differ (" << before_v.cols() << " vs " << before_t.cols()
          << "); spectrum and sliced Wasserstein sections are skipped\n";
    }
    source = {{"features_v", *a.features_v},
              {"features_t", *a.features_t},
              {"input_hash", util::sha256_hex(util::sha256_file(*a.features_v) + util::sha256_file(*a.features_t))}};
  }

  const std::size_t n = before_v.rows();
  std::vector<std::size_t> ks;
  for (auto k : a.ks) {
    if (k == 0) throw ConfigError("--ks entries must be positive");
    if (k < n) {
      ks.push_back(k);
    } else {
      err << "note: overlap cutoff " << k << " dropped (only " << n << " items)\n";
    }
  }
  const auto anchors = a.anchors == 0 ? std::vector<std::size_t>{} : diagnostics::subsample_anchors(n, a.anchors, a.seed);

  diagnostics::DiagnosticsReport report;
  const DenseMatrix& cur_v = have_after ? after_v : before_v;
  const DenseMatrix& cur_t = have_after ? after_t : before_t;
  report.overlap_curve = diagnostics::retrieval_overlap(cur_v, cur_t, ks, anchors);
  report.density_visual = diagnostics::similarity_density(cur_v, a.bins, 200000, a.seed);
  report.density_textual = diagnostics::similarity_density(cur_t, a.bins, 200000, a.seed);
  report.spectrum = spectrum;
  if (have_after) {
    report.swd_before = diagnostics::sliced_wasserstein(before_v, before_t, a.directions, a.seed);
    report.swd_after = diagnostics::sliced_wasserstein(after_v, after_t, a.directions, a.seed);
  } else {
    report.swd_before = report.swd_after = std::numeric_limits<double>::quiet_NaN();
  }

  const fs::path dir = prepare_dir(a.out);
  ordered_json j;
  j["source"] = source;
  j["features"] = have_after ? "projected" : "raw";
  j["anchors"] = anchors.empty() ? n : anchors.size();
  j["swd_directions"] = a.directions;
  j["seed"] = a.seed;
  j["report"] = diagnostics::to_json(report);
  write_json(dir / "diagnostics.json", j);
  diagnostics::write_csvs(report, dir);
  if (a.export_points) {
    write_points(dir / "points_v.csv", diagnostics::principal_coordinates(cur_v));
    write_points(dir / "points_t.csv", diagnostics::principal_coordinates(cur_t));
  }
  for (const auto& p : report.overlap_curve) {
    out << "K=" << p.k << "  overlap " << fmt(p.mean_overlap_ratio) << "  random " << fmt(p.random_expectation)
        << "\n";
  }
  if (have_after) {
    out << "SWD before " << fmt(report.swd_before) << "  after " << fmt(report.swd_after) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  RunOverrides run;
  std::vector<double> lambdas = {0.3, 0.5, 0.7, 0.9};
  std::vector<std::size_t> ranks = {2, 4, 8, 16, 20};
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const RunConfig base = resolve_config(a.run);
  const RunData run = load_run_data(base.data);
  const fs::path dir = prepare_dir(base.output_dir);

  // Validate the whole grid before spending time on training.
  std::vector<RunConfig> cells;
  for (double lambda : a.lambdas) {
    for (std::size_t k : a.ranks) {
      RunConfig cfg = base;
      cfg.train.redundancy.strength_lambda = lambda;
      cfg.train.redundancy.rank_k = k;
      cfg.validate();
      cells.push_back(cfg);
    }
  }

  ordered_json meta;
  meta["config"] = run_identity(base);
  meta["input_hash"] = run.input_hash;
  meta["lambdas"] = a.lambdas;
  meta["ranks"] = a.ranks;
  write_json(dir / "sweep_config.json", meta);

  std::ofstream csv(dir / "sweep.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write " + (dir / "sweep.csv").string());
  csv << "lambda,k,best_epoch,val_recall@20";
  for (auto k : base.train.eval_ks) csv << ",test_recall@" << k << ",test_ndcg@" << k;
  csv << ",frobenius_ratio\n";
  for (const auto& cfg : cells) {
    const auto outcome = train_and_test(cfg, run, nullptr);
    const auto& r = cfg.train.redundancy;
    csv << fmt(r.strength_lambda) << ',' << r.rank_k << ',' << outcome.result.best_epoch << ','
        << fmt(outcome.result.best_val_recall);
    for (auto k : base.train.eval_ks) {
      csv << ',' << fmt(outcome.test.recall(k)) << ',' << fmt(outcome.test.ndcg(k));
    }
    csv << ',' << fmt(outcome.result.final_frobenius_ratio) << '\n';
    csv.flush();
    out << "lambda " << fmt(r.strength_lambda) << "  k " << r.rank_k << "  test Recall@20 "
        << fmt(outcome.test.recall(train::kSelectionK)) << "\n";
  }
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kExitNumerical;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr || dynamic_cast<const InvalidRankError*>(&e) != nullptr ||
      dynamic_cast<const InvalidStrengthError*>(&e) != nullptr) {
    return kExitUsage;
  }
  return kExitData;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CLEAR: cross-modal de-redundancy for multimodal recommendation", "clear"};
  app.require_subcommand(1);

  SynthArgs synth;
  add_synth(app, synth);

  RunOverrides train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train a model and evaluate it on the test split");
  add_run_options(train_cmd, train_opts);

  EvalArgs eval_args;
  add_eval(app, eval_args);

  ProjectArgs project;
  add_project(app, project);

  DiagnoseArgs diagnose;
  add_diagnose(app, diagnose);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over projection strength and rank");
  add_run_options(sweep_cmd, sweep.run);
  sweep_cmd->add_option("--lambdas", sweep.lambdas, "Strength grid")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--ranks", sweep.ranks, "Rank grid")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") return cmd_synth(synth, out);
    if (name == "train") return cmd_train(train_opts, out);
    if (name == "eval") return cmd_eval(eval_args, out);
    if (name == "project") return cmd_project(project, out);
    if (name == "diagnose") return cmd_diagnose(diagnose, out, err);
    if (name == "sweep") return cmd_sweep(sweep, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace clear::cli
