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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clear/checkpoint.hpp"
#include "clear/cli.hpp"
#include "clear/diagnostics.hpp"
#include "clear/eval.hpp"
#include "clear/matrix_io.hpp"
#include "clear/run_config.hpp"
#include "clear/spectral.hpp"
#include "clear/synthetic.hpp"
#include "clear/train.hpp"
#include "../support/test_support.hpp"

using namespace clear;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // <= 0: untimed
  std::function<Verdict()> body;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ------------------------------------------------------------------ 1

Verdict suppression_law() {
  std::mt19937_64 rng(20260101);
  const std::vector<std::size_t> ranks{2, 4, 8};
  const std::vector<double> strengths{0.3, 0.5, 0.7, 0.9};
  double worst_paired = 0.0;
  double worst_sorted = 0.0;
  double smallest_gap = 1e300;
  for (int instance = 0; instance < 50; ++instance) {
    const auto sigma = testing::gapped_spectrum(16, {2, 4, 8}, rng);
    for (std::size_t k : ranks) smallest_gap = std::min(smallest_gap, sigma[k - 1] / sigma[k]);
    const auto planted = testing::planted_pair(300, sigma, rng);
    for (std::size_t k : ranks) {
      for (double lambda : strengths) {
        redundancy::RedundancyConfig cfg;
        cfg.rank_k = k;
        cfg.strength_lambda = lambda;
        const auto pair = redundancy::fit_projectors(planted.v, planted.t, cfg);
        const auto c_tilde = redundancy::projected_covariance(planted.v, planted.t, pair, cfg);
        const double shrink = (1 - lambda) * (1 - lambda);

        // Ratios along the planted singular directions.
        const Eigen::MatrixXd along = planted.u.transpose() * testing::to_eigen(c_tilde) * planted.w;
        std::vector<double> predicted(16);
        for (std::size_t i = 0; i < 16; ++i) {
          const double expected = i < k ? shrink : 1.0;
          predicted[i] = expected * sigma[i];
          const double ratio = along(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) / sigma[i];
          worst_paired = std::max(worst_paired, std::abs(ratio - expected) / expected);
        }
        // Sorted spectrum of the projected covariance against the sorted prediction.
        const auto observed = testing::reference_singular_values(c_tilde);
        std::sort(predicted.rbegin(), predicted.rend());
        for (std::size_t i = 0; i < 16; ++i) {
          worst_sorted = std::max(worst_sorted, std::abs(observed[i] - predicted[i]) / predicted[i]);
        }
      }
    }
  }
  const bool ok = worst_paired <= 1e-6 && worst_sorted <= 1e-6 && smallest_gap >= 1.5;
  return {ok, "50 instances x 12 (k, lambda); max rel. deviation paired " + num(worst_paired) + ", sorted " +
                  num(worst_sorted) + "; min planted gap " + num(smallest_gap)};
}

// ------------------------------------------------------------------ 2

Verdict projector_algebra() {
  std::mt19937_64 rng(2);
  double worst_idempotence = 0.0;
  for (std::size_t k : {1u, 4u, 8u, 16u}) {
    const auto v = testing::gaussian(200, 16, rng);
    const auto t = testing::gaussian(200, 16, rng);
    redundancy::RedundancyConfig cfg;
    cfg.rank_k = k;
    cfg.strength_lambda = 1.0;
    const auto pair = redundancy::fit_projectors(v, t, cfg);
    for (const auto* p : {&pair.visual.matrix, &pair.textual.matrix}) {
      worst_idempotence = std::max(worst_idempotence, max_abs_diff(matmul(*p, *p), *p));
    }
  }

  // λ = 0 through the whole pipeline: fitted projectors, feature projection in
  // both centering modes, and the model forward pass.
  bool identity = true;
  const auto tm = testing::tiny_model(5, 9, 6, 2, 4, 3, 0.0);
  for (bool center : {false, true}) {
    auto ctx = tm.context(true);
    ctx.center_before_project = center;
    const auto fwd = model::forward(tm.state, ctx);
    identity = identity && bitwise_equal(fwd.projected_v, fwd.encoded_v) &&
               bitwise_equal(fwd.projected_t, fwd.encoded_t);
    const auto plain = model::forward(tm.state, tm.context(false));
    identity = identity && bitwise_equal(fwd.fused.user, plain.fused.user) &&
               bitwise_equal(fwd.fused.item, plain.fused.item);
    redundancy::RedundancyConfig cfg;
    cfg.strength_lambda = 0.0;
    cfg.center_before_project = center;
    auto v = testing::gaussian(50, 6, rng);
    v(0, 0) = -0.0;
    const auto t = testing::gaussian(50, 6, rng);
    const auto pair = redundancy::fit_projectors(v, t, cfg);
    const auto [pv, pt] = redundancy::project_features(v, t, pair, cfg);
    identity = identity && bitwise_equal(pv, v) && bitwise_equal(pt, t);
  }
  const bool ok = worst_idempotence <= 1e-10 && identity;
  return {ok, "max |P^2 - P| at lambda=1: " + num(worst_idempotence) +
                  "; lambda=0 bitwise identity: " + (identity ? "yes" : "no")};
}

// ------------------------------------------------------------------ 3

Verdict gradient_oracle() {
  double worst = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto tm = testing::tiny_model(4, 6, 5, 1, seed);
    for (bool projection : {true, false}) {
      const auto check = testing::check_gradient(tm, projection, 1e-2, 1e-5);
      entries += check.entries;
      if (check.max_relative_error > worst) {
        worst = check.max_relative_error;
        where = check.worst_tensor;
      }
    }
  }
  return {worst < 1e-4, std::to_string(entries) + " entries (M=4, N=6, d=5, L=1, h=1e-5); max rel. error " +
                            num(worst) + (where.empty() ? "" : " in " + where)};
}

// ------------------------------------------------------------------ 4

Verdict metric_oracle() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  std::size_t cases = 0;
  bool users_match = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::bernoulli_distribution keep(0.4);
    std::vector<data::Interaction> all;
    for (std::uint32_t u = 0; u < 8; ++u)
      for (std::uint32_t i = 0; i < 12; ++i)
        if (keep(rng)) all.push_back({u, i});
    const auto ds = eval::split_dataset(all, 8, 12, {0.6, 0.2, 0.2}, static_cast<std::uint64_t>(trial));
    auto scores = testing::gaussian(8, 12, rng);
    if (trial % 3 == 0) {
      for (double& x : scores.values()) x = std::round(2.0 * x);
    }
    eval::RankOptions opts;
    opts.ks = {1, 3, 10};
    const auto report = eval::rank_scores(scores, ds, opts);
    for (std::size_t k : opts.ks) {
      const auto brute = testing::brute_force_metrics(scores, ds, k, true);
      users_match = users_match && brute.users == report.evaluated_users;
      worst = std::max({worst, std::abs(report.recall(k) - brute.recall), std::abs(report.ndcg(k) - brute.ndcg)});
      ++cases;
    }
  }
  return {worst <= 1e-12 && users_match,
          std::to_string(cases) + " (instance, K) cases on 8x12; max |diff| " + num(worst)};
}

// ------------------------------------------------------------------ 5

Verdict directional_gain() {
  double mean_projected = 0.0;
  double mean_plain = 0.0;
  double worst_ratio = 0.0;
  std::ostringstream per_seed;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    data::SyntheticSpec spec;  // M = 500, N = 800, r_s = 4, specific-only preferences
    spec.seed = seed;
    const auto synth = data::generate_synthetic(spec);
    const auto ds = eval::split_dataset(synth.interactions, spec.num_users, spec.num_items, {}, seed);
    const train::TrainingInputs inputs{&ds, &synth.raw_v, &synth.raw_t};
    double recall[2];
    for (int arm = 0; arm < 2; ++arm) {
      train::TrainConfig cfg;
      cfg.seed = seed;
      cfg.redundancy.rank_k = 4;
      cfg.redundancy.strength_lambda = arm == 0 ? 0.9 : 0.0;
      const auto result = train::train(inputs, cfg);
      const auto graphs = train::inference_graphs(ds, synth.raw_v, synth.raw_t, cfg);
      recall[arm] = train::evaluate(result.state, result.projectors, inputs, graphs, cfg, eval::Target::kTest)
                        .recall(20);
      if (arm == 0) {
        worst_ratio = std::max({worst_ratio, result.log.back().frobenius_ratio, result.final_frobenius_ratio});
      }
    }
    mean_projected += recall[0] / 3.0;
    mean_plain += recall[1] / 3.0;
    per_seed << " s" << seed << ": " << num(recall[0]) << " vs " << num(recall[1]) << ";";
  }
  const bool ok = mean_projected > mean_plain && worst_ratio < 0.2;
  return {ok, "mean test Recall@20 (k=4, lambda=0.9) " + num(mean_projected) + " vs lambda=0 " + num(mean_plain) +
                  ";" + per_seed.str() + " max Frobenius ratio " + num(worst_ratio)};
}

// ------------------------------------------------------------------ 6

Verdict overlap_calibration() {
  std::mt19937_64 rng(6);
  const std::vector<std::size_t> ks{1, 5, 10, 20, 50};
  const auto v = testing::gaussian(1000, 16, rng);
  bool identical_ok = true;
  for (const auto& p : diagnostics::retrieval_overlap(v, v, ks)) identical_ok = identical_ok && p.mean_overlap_ratio == 1.0;
  const auto t = testing::gaussian(1000, 16, rng);
  // z-scores against the standard error under independence. The sample
  // error is reported alongside; at K=1 it is often exactly zero because no
  // anchor shares its single neighbour.
  double worst_z = 0.0;
  std::ostringstream detail;
  for (const auto& p : diagnostics::retrieval_overlap(v, t, ks)) {
    const double z = std::abs(p.mean_overlap_ratio - p.random_expectation) / p.random_std_error;
    worst_z = std::max(worst_z, z);
    detail << " K=" << p.k << ": " << num(p.mean_overlap_ratio) << " vs " << num(p.random_expectation) << " (z "
           << num(z) << ", sample SE " << num(p.std_error) << ");";
  }
  return {identical_ok && worst_z <= 3.0, std::string("identical -> 1.0: ") + (identical_ok ? "yes" : "no") +
                                              "; independent N=1000, max |z| " + num(worst_z) + ";" + detail.str()};
}

// ------------------------------------------------------------------ 7

Verdict swd_estimator() {
  std::mt19937_64 rng(7);
  const auto v = testing::gaussian(500, 8, rng);
  const double self = diagnostics::sliced_wasserstein(v, v, 2000, 1);
  std::vector<double> delta(8);
  for (double& x : delta) x = std::normal_distribution<double>(0.0, 1.0)(rng);
  DenseMatrix t = v;
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < 8; ++c) t(r, c) += delta[c];
  const double expected = std::sqrt(dot(delta, delta)) * testing::expected_abs_coordinate(8);
  const double got = diagnostics::sliced_wasserstein(v, t, 2000, 11);
  const double rel = std::abs(got - expected) / expected;
  return {self == 0.0 && rel <= 0.05,
          "identical -> " + num(self) + "; shift: " + num(got) + " vs oracle " + num(expected) + " (rel " + num(rel) +
              ")"};
}

// ------------------------------------------------------------------ 8

struct CliRun {
  int code;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "clear");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, err.str()};
}

Verdict determinism_and_formats() {
  const auto dir = testing::scratch_dir("acceptance_determinism");
  const auto data = dir / "data";
  if (invoke({"synth", "--out", data.string(), "--users", "120", "--items", "200", "--seed", "8"}).code != 0) {
    return {false, "synth failed"};
  }
  const std::vector<std::string> common{"train", "--data", data.string(), "--epochs", "8", "--dim", "16",
                                        "--batch-size", "256", "--seed", "31"};
  auto with_out = [&](const std::string& name) {
    auto args = common;
    args.push_back("--out");
    args.push_back((dir / name).string());
    return invoke(args);
  };
  const auto a = with_out("a");
  const auto b = with_out("b");
  if (a.code != 0 || b.code != 0) return {false, "train failed: " + a.err + b.err};
  const bool same_ckpt = io::read_file(dir / "a" / "checkpoint.clrc") == io::read_file(dir / "b" / "checkpoint.clrc");
  const bool same_log = io::read_file(dir / "a" / "train_log.jsonl") == io::read_file(dir / "b" / "train_log.jsonl");

  std::mt19937_64 rng(8);
  auto m = testing::gaussian(13, 7, rng);
  m(0, 0) = -0.0;
  m(1, 1) = std::numeric_limits<double>::denorm_min();
  io::save_matrix(dir / "m.clrf", m);
  io::save_matrix(dir / "m32.clrf", m, io::Dtype::kF32);
  const auto widened = io::load_matrix(dir / "m32.clrf");
  bool round_trip = bitwise_equal(io::load_matrix(dir / "m.clrf"), m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    round_trip = round_trip && widened.values()[i] == static_cast<double>(static_cast<float>(m.values()[i]));
  }

  // Reload the checkpoint and re-run the test evaluation.
  const auto ck = checkpoint::load_checkpoint(dir / "a" / "checkpoint.clrc");
  const auto saved = eval::eval_report_from_json(ck.metadata.at("eval_test"));
  const auto cfg = cli::run_config_from_json(ck.metadata.at("config"));
  const auto run = cli::load_run_data(cfg.data);
  const train::TrainingInputs inputs{&run.dataset, &run.raw_v, &run.raw_t};
  const auto graphs = train::inference_graphs(run.dataset, run.raw_v, run.raw_t, cfg.train);
  const auto again = train::evaluate(ck.state, ck.projectors, inputs, graphs, cfg.train, eval::Target::kTest);
  double dev = 0.0;
  for (const auto& [k, mp] : saved.metrics) {
    dev = std::max({dev, std::abs(mp.recall - again.recall(k)), std::abs(mp.ndcg - again.ndcg(k))});
  }
  const bool ok = same_ckpt && same_log && round_trip && dev <= 1e-12;
  return {ok, std::string("checkpoints identical: ") + (same_ckpt ? "yes" : "no") +
                  "; logs identical: " + (same_log ? "yes" : "no") + "; CLRF bit-exact: " +
                  (round_trip ? "yes" : "no") + "; reloaded EvalReport max |diff| " + num(dev)};
}

// ------------------------------------------------------------------ 9

Verdict ablation_consistency() {
  data::SyntheticSpec spec;
  spec.num_users = 150;
  spec.num_items = 240;
  spec.seed = 9;
  const auto synth = data::generate_synthetic(spec);
  const auto ds = eval::split_dataset(synth.interactions, spec.num_users, spec.num_items, {}, 9);
  const train::TrainingInputs inputs{&ds, &synth.raw_v, &synth.raw_t};
  train::TrainConfig off;
  off.max_epochs = 15;
  off.dim = 32;
  off.redundancy.enabled = false;
  train::TrainConfig zero = off;
  zero.redundancy.enabled = true;
  zero.redundancy.strength_lambda = 0.0;
  const auto a = train::train(inputs, off);
  const auto b = train::train(inputs, zero);

  bool same = a.log.size() == b.log.size() && a.best_epoch == b.best_epoch;
  const auto ta = a.state.tensors();
  const auto tb = b.state.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) same = same && bitwise_equal(*ta[i], *tb[i]);
  for (std::size_t e = 0; same && e < a.log.size(); ++e) {
    same = a.log[e].loss == b.log[e].loss && a.log[e].val_recall == b.log[e].val_recall &&
           a.log[e].val_ndcg == b.log[e].val_ndcg;
  }
  const auto graphs = train::inference_graphs(ds, synth.raw_v, synth.raw_t, off);
  const auto ea = train::embed(a.state, a.projectors, inputs, graphs, off);
  const auto eb = train::embed(b.state, b.projectors, inputs, graphs, zero);
  same = same && bitwise_equal(ea.user, eb.user) && bitwise_equal(ea.item, eb.item);
  const auto ra = eval::to_json(train::evaluate(a.state, a.projectors, inputs, graphs, off, eval::Target::kTest));
  const auto rb = eval::to_json(train::evaluate(b.state, b.projectors, inputs, graphs, zero, eval::Target::kTest));
  same = same && ra.dump() == rb.dump();
  return {same, std::to_string(a.log.size()) + " epochs; parameters, losses, embeddings and test report " +
                    (same ? "bitwise identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "singular value suppression", 10.0, suppression_law},
      {2, "projector algebra", 1.0, projector_algebra},
      {3, "gradient oracle", 5.0, gradient_oracle},
      {4, "metric oracle", 1.0, metric_oracle},
      {5, "directional de-redundancy gain", 600.0, directional_gain},
      {6, "overlap diagnostic calibration", 30.0, overlap_calibration},
      {7, "sliced Wasserstein estimator", 10.0, swd_estimator},
      {8, "determinism and formats", 0.0, determinism_and_formats},
      {9, "ablation consistency", 0.0, ablation_consistency},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = num(secs) + " s";
    if (c.time_limit_s > 0.0) {
      timing += " (limit " + num(c.time_limit_s) + " s)";
      if (secs >= c.time_limit_s) {
        v.pass = false;
        timing += " TOO SLOW";
      }
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.name << ": " << v.detail << " ["
              << timing << "]" << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
