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

#include "clear/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clear/errors.hpp"
#include "clear/graph.hpp"

namespace clear::train {

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kDropoutStream = 2, kSamplingStream = 3 };

std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::string numerical_dump(std::size_t epoch, std::size_t batch, double loss,
                           const model::ModelState& state) {
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << ", batch " << batch << " (loss=" << loss
     << "); parameter norms:";
  const auto tensors = state.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    os << ' ' << model::ModelState::kTensorNames[i] << '=' << tensors[i]->frobenius_norm();
  }
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (dim == 0) throw ConfigError("train: dim must be positive");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("train: gamma must be nonnegative");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
  if (early_stop_patience == 0) throw ConfigError("train: early_stop_patience must be positive");
  if (!(edge_dropout >= 0.0 && edge_dropout < 1.0)) throw ConfigError("train: edge_dropout must lie in [0, 1)");
  if (!(graph_alpha >= 0.0 && graph_alpha <= 1.0)) throw ConfigError("train: graph_alpha must lie in [0, 1]");
  if (eval_ks.empty()) throw ConfigError("train: eval_ks must not be empty");
  for (auto k : eval_ks) {
    if (k == 0) throw ConfigError("train: eval_ks entries must be positive");
  }
  redundancy.validate(dim);
}

model::BatchTriplets sample_triplets(const data::InteractionDataset& data,
                                     const std::vector<std::vector<std::uint32_t>>& train_by_user,
                                     std::mt19937_64& rng) {
  std::vector<data::Interaction> order = data.train;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(data.num_items - 1));
  model::BatchTriplets out;
  out.reserve(order.size());
  for (const auto& p : order) {
    const auto& seen = train_by_user[p.user];
    if (seen.size() >= data.num_items) continue;  // nothing to contrast against
    std::uint32_t neg = pick(rng);
    while (std::binary_search(seen.begin(), seen.end(), neg)) neg = pick(rng);
    out.push_back({p.user, p.item, neg});
  }
  return out;
}

model::GraphSet inference_graphs(const data::InteractionDataset& data, const DenseMatrix& raw_v,
                                 const DenseMatrix& raw_t, const TrainConfig& cfg) {
  std::mt19937_64 unused(0);
  return {graph::normalized_adjacency(data.train, data.num_users, data.num_items, 0.0, unused),
          graph::item_item_graph(raw_v, raw_t, cfg.knn_k, cfg.graph_alpha), cfg.graph_alpha};
}

model::FusedEmbeddings embed(const model::ModelState& state, const redundancy::ProjectionPair& pair,
                             const TrainingInputs& inputs, const model::GraphSet& graphs,
                             const TrainConfig& cfg) {
  model::PipelineContext ctx{inputs.raw_v, inputs.raw_t,
                             cfg.redundancy.enabled ? &pair : nullptr,
                             cfg.redundancy.center_before_project, &graphs, cfg.layers};
  return model::forward(state, ctx).fused;
}

eval::EvalReport evaluate(const model::ModelState& state, const redundancy::ProjectionPair& pair,
                          const TrainingInputs& inputs, const model::GraphSet& graphs,
                          const TrainConfig& cfg, eval::Target target) {
  const auto fused = embed(state, pair, inputs, graphs, cfg);
  eval::RankOptions options;
  options.ks = cfg.eval_ks;
  if (std::find(options.ks.begin(), options.ks.end(), kSelectionK) == options.ks.end()) {
    options.ks.push_back(kSelectionK);
  }
  options.target = target;
  return eval::rank_and_score(fused.user, fused.item, *inputs.data, options);
}

TrainResult train(const TrainingInputs& inputs, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (inputs.data == nullptr || inputs.raw_v == nullptr || inputs.raw_t == nullptr) {
    throw InvalidInputError("train: incomplete inputs");
  }
  cfg.validate();
  const auto& data = *inputs.data;
  const auto& raw_v = *inputs.raw_v;
  const auto& raw_t = *inputs.raw_t;
  if (raw_v.rows() != data.num_items || raw_t.rows() != data.num_items) {
    throw DimensionError("train: feature rows do not match the item count");
  }
  if (data.train.empty()) throw InvalidInputError("train: empty training split");

  auto init_rng = make_stream(cfg.seed, kInitStream);
  auto dropout_rng = make_stream(cfg.seed, kDropoutStream);
  auto sampling_rng = make_stream(cfg.seed, kSamplingStream);

  model::ModelState state =
      model::ModelState::xavier(data.num_users, raw_v.cols(), raw_t.cols(), cfg.dim, init_rng);
  model::AdamOptimizer adam(state, cfg.lr);
  const auto train_by_user = data::InteractionDataset::group_by_user(data.train, data.num_users);
  const model::GraphSet eval_graphs = inference_graphs(data, raw_v, raw_t, cfg);
  model::GraphSet epoch_graphs = eval_graphs;

  const bool project = cfg.redundancy.enabled;
  redundancy::ProjectionPair pair = redundancy::identity_pair(cfg.dim);

  TrainResult result{state, pair, {}, 0, -1.0, 1.0};
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    bool refreshed = false;
    if (project && redundancy::should_refresh(epoch, cfg.redundancy.refresh_interval_tau)) {
      const auto [enc_v, enc_t] = model::encode(raw_v, raw_t, state);
      pair = redundancy::fit_projectors(enc_v, enc_t, cfg.redundancy, epoch);
      refreshed = true;
    }
    epoch_graphs.ui_adjacency = graph::normalized_adjacency(data.train, data.num_users, data.num_items,
                                                            cfg.edge_dropout, dropout_rng);
    const model::BatchTriplets triplets = sample_triplets(data, train_by_user, sampling_rng);
    const model::PipelineContext ctx{&raw_v, &raw_t, project ? &pair : nullptr,
                                     cfg.redundancy.center_before_project, &epoch_graphs, cfg.layers};

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < triplets.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(triplets.size(), start + cfg.batch_size);
      const model::BatchTriplets batch(triplets.begin() + static_cast<std::ptrdiff_t>(start),
                                       triplets.begin() + static_cast<std::ptrdiff_t>(stop));
      const auto step = model::loss_and_gradient(state, ctx, batch, cfg.gamma);
      if (!std::isfinite(step.loss) || !step.grad.all_finite()) {
        throw NumericalError(numerical_dump(epoch, batch_index, step.loss, state));
      }
      epoch_loss += step.loss;
      adam.step(state, step.grad);
    }
    if (!state.all_finite()) throw NumericalError(numerical_dump(epoch, batch_index, epoch_loss, state));

    const auto val = evaluate(state, pair, inputs, eval_graphs, cfg, eval::Target::kValidation);
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = epoch_loss;
    entry.val_recall = val.recall(kSelectionK);
    entry.val_ndcg = val.ndcg(kSelectionK);
    entry.rank_k = project ? pair.rank() : 0;
    entry.strength_lambda = project ? pair.strength() : 0.0;
    entry.refreshed = refreshed;
    if (project) {
      const auto [enc_v, enc_t] = model::encode(raw_v, raw_t, state);
      entry.frobenius_ratio = redundancy::frobenius_ratio(enc_v, enc_t, pair, cfg.redundancy);
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.val_recall > result.best_val_recall) {
      result.best_val_recall = entry.val_recall;
      result.best_epoch = epoch;
      result.state = state;
      result.projectors = pair;
      result.final_frobenius_ratio = entry.frobenius_ratio;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace clear::train
