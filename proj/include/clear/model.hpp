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
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "clear/dense_matrix.hpp"
#include "clear/graph.hpp"
#include "clear/redundancy.hpp"

namespace clear::model {

/// All trainable parameters.
struct ModelState {
  DenseMatrix encoder_visual_weight;   // raw_d_v × d
  DenseMatrix encoder_visual_bias;     // 1 × d
  DenseMatrix encoder_textual_weight;  // raw_d_t × d
  DenseMatrix encoder_textual_bias;    // 1 × d
  DenseMatrix user_emb_visual;         // M × d
  DenseMatrix user_emb_textual;        // M × d
  DenseMatrix fusion_logits;           // 1 × 2 (visual, textual)

  static constexpr std::size_t kTensorCount = 7;
  static constexpr std::array<std::string_view, kTensorCount> kTensorNames = {
      "encoder_visual_weight", "encoder_visual_bias", "encoder_textual_weight",
      "encoder_textual_bias",  "user_emb_visual",     "user_emb_textual",
      "fusion_logits"};

  std::array<DenseMatrix*, kTensorCount> tensors();
  std::array<const DenseMatrix*, kTensorCount> tensors() const;

  std::size_t dim() const { return encoder_visual_weight.cols(); }
  std::size_t num_users() const { return user_emb_visual.rows(); }

  /// Xavier-uniform weights and user tables; zero biases and fusion logits.
  static ModelState xavier(std::size_t num_users, std::size_t raw_dim_v, std::size_t raw_dim_t,
                           std::size_t dim, std::mt19937_64& rng);
  /// Same shapes, all zeros.
  static ModelState zeros_like(const ModelState& other);

  bool all_finite() const;
  /// Throws DimensionError when shapes are inconsistent.
  void validate() const;
};

/// Frozen graph structure shared by every forward pass of an epoch.
struct GraphSet {
  graph::SparseMatrix ui_adjacency;  // (M+N)×(M+N), users first
  graph::SparseMatrix item_item;     // N×N, row-normalized
  double modality_graph_weight_alpha = 0.5;
};

/// Everything a forward pass reads besides the parameters.
struct PipelineContext {
  const DenseMatrix* raw_v = nullptr;
  const DenseMatrix* raw_t = nullptr;
  /// nullptr disables projection entirely ("w/o null-space").
  const redundancy::ProjectionPair* projectors = nullptr;
  bool center_before_project = false;
  const GraphSet* graphs = nullptr;
  std::size_t layers = 2;
};

struct Triplet {
  std::uint32_t user = 0;
  std::uint32_t pos_item = 0;
  std::uint32_t neg_item = 0;
};
using BatchTriplets = std::vector<Triplet>;

/// Affine encoders: raw · W + 1·bᵀ.
std::pair<DenseMatrix, DenseMatrix> encode(const DenseMatrix& raw_v, const DenseMatrix& raw_t,
                                           const ModelState& m);

/// Layer-averaged parameter-free propagation of one stacked feature matrix.
DenseMatrix propagate_layers(const DenseMatrix& x0, const graph::SparseMatrix& adjacency,
                             std::size_t layers);
/// Adjoint of propagate_layers.
DenseMatrix propagate_layers_backward(const DenseMatrix& grad_out,
                                      const graph::SparseMatrix& adjacency, std::size_t layers);

/// Stacks [user table; projected items] per modality and propagates both.
std::pair<DenseMatrix, DenseMatrix> propagate(const DenseMatrix& v_proj, const DenseMatrix& t_proj,
                                              const ModelState& m,
                                              const graph::SparseMatrix& adjacency,
                                              std::size_t layers);

/// Softmax over the two fusion logits.
std::array<double, 2> fusion_weights(const ModelState& m);

struct FusedEmbeddings {
  DenseMatrix user;  // M×d
  DenseMatrix item;  // N×d
};

/// Users: a_v·h_v + a_t·h_t. Items: h_v + h_t + S·(α·h_v + (1−α)·h_t).
FusedEmbeddings fuse_and_score(const DenseMatrix& h_v, const DenseMatrix& h_t, const ModelState& m,
                               const GraphSet& g);

struct BprResult {
  double loss = 0.0;  // bpr + reg
  double bpr = 0.0;
  double reg = 0.0;
  DenseMatrix grad_user;  // ∂bpr/∂user_emb
  DenseMatrix grad_item;  // ∂bpr/∂item_emb
};

/// Summed BPR over the batch plus γ(‖E_u^v‖² + ‖E_u^t‖² + ‖w‖²).
BprResult bpr_loss(const DenseMatrix& user_emb, const DenseMatrix& item_emb,
                   const BatchTriplets& batch, const ModelState& m, double gamma);

/// Intermediate values of one forward pass.
struct ForwardPass {
  DenseMatrix encoded_v, encoded_t;
  DenseMatrix projected_v, projected_t;
  DenseMatrix h_v, h_t;
  FusedEmbeddings fused;
};

ForwardPass forward(const ModelState& m, const PipelineContext& ctx);

struct LossAndGradient {
  double loss = 0.0;
  double bpr = 0.0;
  double reg = 0.0;
  ModelState grad;
};

/// Full objective and its gradient w.r.t. every parameter. Projectors and
/// graphs in `ctx` are constants.
LossAndGradient loss_and_gradient(const ModelState& m, const PipelineContext& ctx,
                                  const BatchTriplets& batch, double gamma);

/// Adam with bias correction, one moment pair per parameter tensor.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelState& shape, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(ModelState& params, const ModelState& grad);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  ModelState m_;
  ModelState v_;
};

}  // namespace clear::model
