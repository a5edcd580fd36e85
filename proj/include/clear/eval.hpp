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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "clear/dataset.hpp"
#include "clear/dense_matrix.hpp"

namespace clear::eval {

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Per-user random split. Every user keeps at least one interaction in train.
data::InteractionDataset split_dataset(const std::vector<data::Interaction>& interactions,
                                       std::size_t num_users, std::size_t num_items,
                                       const SplitRatios& ratios, std::uint64_t seed);

enum class Target { kValidation, kTest };

struct MetricPair {
  double recall = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::map<std::size_t, MetricPair> metrics;  // keyed by K
  std::size_t evaluated_users = 0;
  std::size_t skipped_users = 0;
  /// Optional per-user values, [user][K index in ascending K order].
  std::vector<std::uint32_t> user_index;
  std::vector<std::vector<MetricPair>> per_user;

  double recall(std::size_t k) const { return metrics.at(k).recall; }
  double ndcg(std::size_t k) const { return metrics.at(k).ndcg; }
};

struct RankOptions {
  std::vector<std::size_t> ks = {10, 20};
  Target target = Target::kTest;
  bool keep_per_user = false;
};

/// Top-K ranking by ⟨e_u, e_i⟩ with known items masked (train, plus val when
/// evaluating test). Ties go to the lower item index. Users without held-out
/// items are skipped and counted.
EvalReport rank_and_score(const DenseMatrix& user_emb, const DenseMatrix& item_emb,
                          const data::InteractionDataset& data, const RankOptions& options);

/// Same ranking over an explicit score matrix (users × items).
EvalReport rank_scores(const DenseMatrix& scores, const data::InteractionDataset& data,
                       const RankOptions& options);

/// JSON with fixed key order: {"evaluated_users", "skipped_users", "metrics": {"10": {...}}}.
nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace clear::eval
