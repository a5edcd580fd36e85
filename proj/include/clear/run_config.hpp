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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clear/dataset.hpp"
#include "clear/dense_matrix.hpp"
#include "clear/eval.hpp"
#include "clear/train.hpp"

namespace clear::cli {

inline constexpr int kRunConfigSchemaVersion = 1;

struct DataConfig {
  std::string dir = ".";
  std::string interactions = "interactions.tsv";
  std::string features_v = "raw_v.clrf";
  std::string features_t = "raw_t.clrf";
  std::string name = "synthetic";
  data::IdPolicy id_policy = data::IdPolicy::kNumericIndex;
  std::size_t core_filter = 0;  // 0 disables k-core filtering
  eval::SplitRatios split;
  std::uint64_t split_seed = 2026;
};

struct DiagnosticsConfig {
  bool enabled = false;
  std::vector<std::size_t> overlap_ks = {1, 5, 10, 20, 50};
  std::size_t swd_directions = 128;
  std::size_t anchors = 0;  // 0 = every item
  std::uint64_t seed = 2026;
};

/// Declarative description of one run.
struct RunConfig {
  int schema_version = kRunConfigSchemaVersion;
  DataConfig data;
  std::string output_dir = "run";
  train::TrainConfig train;
  DiagnosticsConfig diagnostics;

  void validate() const;
};

/// Rejects unknown keys and wrong types with ConfigError. Missing keys keep defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunConfig& cfg);
/// TrainConfig fragment alone (what checkpoints record).
nlohmann::ordered_json to_json(const train::TrainConfig& cfg);
train::TrainConfig train_config_from_json(const nlohmann::json& train, const nlohmann::json& redundancy);

RunConfig load_run_config(const std::filesystem::path& path);

/// Loaded, filtered and split dataset plus its item features.
struct RunData {
  data::InteractionDataset dataset;
  DenseMatrix raw_v;
  DenseMatrix raw_t;
  std::string input_hash;  // sha256 over the input file digests
};

/// Throws DataError / FormatError.
RunData load_run_data(const DataConfig& cfg);

}  // namespace clear::cli
