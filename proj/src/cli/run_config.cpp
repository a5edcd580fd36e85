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

#include "clear/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>

#include "clear/errors.hpp"
#include "clear/hash.hpp"
#include "clear/matrix_io.hpp"

namespace clear::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Strict view over one JSON object of the config.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items()) {
      if (known.count(key) == 0) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    const std::string where = path_ + "." + key;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!is_count(v)) throw ConfigError(where + ": expected a nonnegative integer");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigError(where + ": expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where + ": expected a string");
      } else {
        if (!v.is_array()) throw ConfigError(where + ": expected an array");
        for (const auto& e : v) {
          if (!is_count(e)) throw ConfigError(where + ": expected nonnegative integers");
        }
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

const char* id_policy_name(data::IdPolicy p) {
  return p == data::IdPolicy::kNumericIndex ? "numeric" : "first_seen";
}

const char* rank_mode_name(redundancy::RankMode m) {
  return m == redundancy::RankMode::kFixed ? "fixed" : "dynamic_ratio";
}

redundancy::RedundancyConfig parse_redundancy(const json& j) {
  redundancy::RedundancyConfig r;
  Section s(j, "redundancy",
            {"enabled", "rank_k", "lambda", "tau", "rank_mode", "energy_threshold",
             "center_before_project"});
  s.read("enabled", r.enabled);
  s.read("rank_k", r.rank_k);
  s.read("lambda", r.strength_lambda);
  s.read("tau", r.refresh_interval_tau);
  std::string mode = rank_mode_name(r.rank_mode);
  s.read("rank_mode", mode);
  if (mode == "fixed") {
    r.rank_mode = redundancy::RankMode::kFixed;
  } else if (mode == "dynamic_ratio") {
    r.rank_mode = redundancy::RankMode::kDynamicRatio;
  } else {
    throw ConfigError("redundancy.rank_mode: expected 'fixed' or 'dynamic_ratio'");
  }
  s.read("energy_threshold", r.energy_threshold);
  s.read("center_before_project", r.center_before_project);
  return r;
}

}  // namespace

void RunConfig::validate() const {
  if (schema_version != kRunConfigSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                      std::to_string(kRunConfigSchemaVersion) + ")");
  }
  const auto& sp = data.split;
  if (sp.train <= 0.0 || sp.val < 0.0 || sp.test < 0.0 || std::abs(sp.train + sp.val + sp.test - 1.0) > 1e-9) {
    throw ConfigError("data.split: ratios must be nonnegative, train positive, and sum to 1");
  }
  if (diagnostics.swd_directions == 0) throw ConfigError("diagnostics.swd_directions must be positive");
  train.validate();
}

train::TrainConfig train_config_from_json(const json& tj, const json& rj) {
  train::TrainConfig t;
  Section s(tj, "train",
            {"dim", "layers", "lr", "gamma", "batch_size", "max_epochs", "seed", "early_stop_patience",
             "edge_dropout", "knn_k", "graph_alpha", "eval_ks"});
  s.read("dim", t.dim);
  s.read("layers", t.layers);
  s.read("lr", t.lr);
  s.read("gamma", t.gamma);
  s.read("batch_size", t.batch_size);
  s.read("max_epochs", t.max_epochs);
  s.read("seed", t.seed);
  s.read("early_stop_patience", t.early_stop_patience);
  s.read("edge_dropout", t.edge_dropout);
  s.read("knn_k", t.knn_k);
  s.read("graph_alpha", t.graph_alpha);
  s.read("eval_ks", t.eval_ks);
  t.redundancy = parse_redundancy(rj);
  return t;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  Section root(j, "config", {"schema_version", "data", "output_dir", "train", "redundancy", "diagnostics"});
  if (!root.has("schema_version")) throw ConfigError("config: schema_version is required");
  root.read("schema_version", cfg.schema_version);
  root.read("output_dir", cfg.output_dir);
  if (root.has("data")) {
    Section d(root.at("data"), "data",
              {"dir", "interactions", "features_v", "features_t", "name", "id_policy", "core_filter",
               "split", "split_seed"});
    d.read("dir", cfg.data.dir);
    d.read("interactions", cfg.data.interactions);
    d.read("features_v", cfg.data.features_v);
    d.read("features_t", cfg.data.features_t);
    d.read("name", cfg.data.name);
    std::string policy = id_policy_name(cfg.data.id_policy);
    d.read("id_policy", policy);
    if (policy == "numeric") {
      cfg.data.id_policy = data::IdPolicy::kNumericIndex;
    } else if (policy == "first_seen") {
      cfg.data.id_policy = data::IdPolicy::kFirstSeen;
    } else {
      throw ConfigError("data.id_policy: expected 'numeric' or 'first_seen'");
    }
    d.read("core_filter", cfg.data.core_filter);
    d.read("split_seed", cfg.data.split_seed);
    if (d.has("split")) {
      Section sp(d.at("split"), "data.split", {"train", "val", "test"});
      sp.read("train", cfg.data.split.train);
      sp.read("val", cfg.data.split.val);
      sp.read("test", cfg.data.split.test);
    }
  }
  cfg.train = train_config_from_json(root.has("train") ? root.at("train") : json::object(),
                                     root.has("redundancy") ? root.at("redundancy") : json::object());
  if (root.has("diagnostics")) {
    Section s(root.at("diagnostics"), "diagnostics", {"enabled", "overlap_ks", "swd_directions", "anchors", "seed"});
    s.read("enabled", cfg.diagnostics.enabled);
    s.read("overlap_ks", cfg.diagnostics.overlap_ks);
    s.read("swd_directions", cfg.diagnostics.swd_directions);
    s.read("anchors", cfg.diagnostics.anchors);
    s.read("seed", cfg.diagnostics.seed);
  }
  cfg.validate();
  return cfg;
}

ordered_json to_json(const train::TrainConfig& t) {
  ordered_json out;
  ordered_json tj;
  tj["dim"] = t.dim;
  tj["layers"] = t.layers;
  tj["lr"] = t.lr;
  tj["gamma"] = t.gamma;
  tj["batch_size"] = t.batch_size;
  tj["max_epochs"] = t.max_epochs;
  tj["seed"] = t.seed;
  tj["early_stop_patience"] = t.early_stop_patience;
  tj["edge_dropout"] = t.edge_dropout;
  tj["knn_k"] = t.knn_k;
  tj["graph_alpha"] = t.graph_alpha;
  tj["eval_ks"] = t.eval_ks;
  const auto& r = t.redundancy;
  ordered_json rj;
  rj["enabled"] = r.enabled;
  rj["rank_k"] = r.rank_k;
  rj["lambda"] = r.strength_lambda;
  rj["tau"] = r.refresh_interval_tau;
  rj["rank_mode"] = rank_mode_name(r.rank_mode);
  rj["energy_threshold"] = r.energy_threshold;
  rj["center_before_project"] = r.center_before_project;
  out["train"] = tj;
  out["redundancy"] = rj;
  return out;
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["schema_version"] = cfg.schema_version;
  ordered_json d;
  d["dir"] = cfg.data.dir;
  d["interactions"] = cfg.data.interactions;
  d["features_v"] = cfg.data.features_v;
  d["features_t"] = cfg.data.features_t;
  d["name"] = cfg.data.name;
  d["id_policy"] = id_policy_name(cfg.data.id_policy);
  d["core_filter"] = cfg.data.core_filter;
  d["split"] = {{"train", cfg.data.split.train}, {"val", cfg.data.split.val}, {"test", cfg.data.split.test}};
  d["split_seed"] = cfg.data.split_seed;
  j["data"] = d;
  j["output_dir"] = cfg.output_dir;
  const auto tr = to_json(cfg.train);
  j["train"] = tr["train"];
  j["redundancy"] = tr["redundancy"];
  ordered_json dg;
  dg["enabled"] = cfg.diagnostics.enabled;
  dg["overlap_ks"] = cfg.diagnostics.overlap_ks;
  dg["swd_directions"] = cfg.diagnostics.swd_directions;
  dg["anchors"] = cfg.diagnostics.anchors;
  dg["seed"] = cfg.diagnostics.seed;
  j["diagnostics"] = dg;
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

RunData load_run_data(const DataConfig& cfg) {
  const std::filesystem::path dir(cfg.dir);
  const auto interactions_path = dir / cfg.interactions;
  const auto v_path = dir / cfg.features_v;
  const auto t_path = dir / cfg.features_t;

  auto loaded = data::load_interactions(interactions_path, cfg.id_policy);
  RunData out;
  out.raw_v = io::load_matrix(v_path);
  out.raw_t = io::load_matrix(t_path);
  if (out.raw_v.rows() != out.raw_t.rows()) {
    throw DataError("feature files disagree on the item count: " + std::to_string(out.raw_v.rows()) +
                    " vs " + std::to_string(out.raw_t.rows()));
  }
  if (!out.raw_v.all_finite() || !out.raw_t.all_finite()) throw DataError("feature files contain non-finite values");
  if (loaded.num_items() > out.raw_v.rows()) {
    throw DataError("interactions reference " + std::to_string(loaded.num_items()) +
                    " items but the feature files have " + std::to_string(out.raw_v.rows()) + " rows");
  }

  std::vector<data::Interaction> pairs = std::move(loaded.pairs);
  std::size_t num_users = loaded.num_users();
  std::size_t num_items = out.raw_v.rows();
  if (cfg.core_filter > 0) {
    auto filtered = data::k_core_filter(pairs, cfg.core_filter);
    pairs = std::move(filtered.pairs);
    num_users = filtered.kept_users.size();
    num_items = filtered.kept_items.size();
    auto select = [&](const DenseMatrix& m) {
      DenseMatrix s(filtered.kept_items.size(), m.cols());
      for (std::size_t r = 0; r < filtered.kept_items.size(); ++r) {
        auto src = m.row(filtered.kept_items[r]);
        std::copy(src.begin(), src.end(), s.row(r).begin());
      }
      return s;
    };
    out.raw_v = select(out.raw_v);
    out.raw_t = select(out.raw_t);
  }
  if (pairs.empty()) throw DataError("no interactions left after filtering");
  data::verify_documented_stats(cfg.name, data::DatasetStats{num_users, num_items, pairs.size()});
  out.dataset = eval::split_dataset(pairs, num_users, num_items, cfg.split, cfg.split_seed);
  out.input_hash = util::sha256_hex(util::sha256_file(interactions_path) + util::sha256_file(v_path) +
                                    util::sha256_file(t_path));
  return out;
}

}  // namespace clear::cli
