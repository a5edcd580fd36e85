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
#include <functional>
#include <optional>
#include <vector>

#include "clear/dataset.hpp"
#include "clear/eval.hpp"
#include "clear/model.hpp"
#include "clear/redundancy.hpp"

namespace clear::train {

struct TrainConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  double lr = 1e-3;
  double gamma = 1e-4;
  std::size_t batch_size = 2048;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 2026;
  std::size_t early_stop_patience = 20;
  double edge_dropout = 0.1;
  std::size_t knn_k = 10;
  double graph_alpha = 0.5;
  std::vector<std::size_t> eval_ks = {10, 20};
  redundancy::RedundancyConfig redundancy;

  /// Throws ConfigError.
  void validate() const;
};

/// Cutoff used for validation-based early stopping.
inline constexpr std::size_t kSelectionK = 20;

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_recall = 0.0;  // at kSelectionK
  double val_ndcg = 0.0;
  std::size_t rank_k = 0;
  double strength_lambda = 0.0;
  bool refreshed = false;
  double frobenius_ratio = 1.0;
};

struct TrainResult {
  model::ModelState state;  // best validation epoch
  redundancy::ProjectionPair projectors;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_recall = 0.0;
  /// ‖C̃‖_F/‖C‖_F of the returned state's encoded features.
  double final_frobenius_ratio = 1.0;
};

struct TrainingInputs {
  const data::InteractionDataset* data = nullptr;
  const DenseMatrix* raw_v = nullptr;
  const DenseMatrix* raw_t = nullptr;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Runs the full training procedure: projector refresh every τ epochs,
/// per-epoch edge dropout and negative sampling, Adam mini-batch updates and
/// early stopping on validation Recall@20. Deterministic given `cfg.seed`.
/// Throws NumericalError on a non-finite loss.
TrainResult train(const TrainingInputs& inputs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// One uniform negative per training interaction, in shuffled order.
model::BatchTriplets sample_triplets(const data::InteractionDataset& data,
                                     const std::vector<std::vector<std::uint32_t>>& train_by_user,
                                     std::mt19937_64& rng);

/// Dropout-free graphs for inference.
model::GraphSet inference_graphs(const data::InteractionDataset& data, const DenseMatrix& raw_v,
                                 const DenseMatrix& raw_t, const TrainConfig& cfg);

/// Final user/item embeddings of a trained state.
model::FusedEmbeddings embed(const model::ModelState& state, const redundancy::ProjectionPair& pair,
                             const TrainingInputs& inputs, const model::GraphSet& graphs,
                             const TrainConfig& cfg);

eval::EvalReport evaluate(const model::ModelState& state, const redundancy::ProjectionPair& pair,
                          const TrainingInputs& inputs, const model::GraphSet& graphs,
                          const TrainConfig& cfg, eval::Target target);

}  // namespace clear::train
