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

#include "clear/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clear/errors.hpp"

namespace clear::model {

namespace {

DenseMatrix xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  DenseMatrix m(rows, cols);
  for (double& x : m.values()) x = uniform(rng);
  return m;
}

DenseMatrix affine(const DenseMatrix& raw, const DenseMatrix& weight, const DenseMatrix& bias) {
  if (raw.cols() != weight.rows()) {
    throw DimensionError("encode: raw width " + std::to_string(raw.cols()) +
                         " does not match encoder input " + std::to_string(weight.rows()));
  }
  DenseMatrix out = matmul(raw, weight);
  auto b = bias.row(0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return out;
}

DenseMatrix stack_rows(const DenseMatrix& top, const DenseMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionError("stack_rows: widths differ");
  DenseMatrix out(top.rows() + bottom.rows(), top.cols());
  auto dst = out.values();
  std::copy(top.values().begin(), top.values().end(), dst.begin());
  std::copy(bottom.values().begin(), bottom.values().end(),
            dst.begin() + static_cast<std::ptrdiff_t>(top.size()));
  return out;
}

DenseMatrix row_block(const DenseMatrix& m, std::size_t first, std::size_t count) {
  DenseMatrix out(count, m.cols());
  auto src = m.values().subspan(first * m.cols(), count * m.cols());
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

double squared_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double x : m.values()) s += x * x;
  return s;
}

// −log σ(x), evaluated without overflow.
double softplus_neg(double x) {
  return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void add_scaled(DenseMatrix& dst, double s, const DenseMatrix& src) {
  auto d = dst.values();
  auto v = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * v[i];
}

}  // namespace

std::array<DenseMatrix*, ModelState::kTensorCount> ModelState::tensors() {
  return {&encoder_visual_weight, &encoder_visual_bias, &encoder_textual_weight,
          &encoder_textual_bias,  &user_emb_visual,     &user_emb_textual,
          &fusion_logits};
}

std::array<const DenseMatrix*, ModelState::kTensorCount> ModelState::tensors() const {
  return {&encoder_visual_weight, &encoder_visual_bias, &encoder_textual_weight,
          &encoder_textual_bias,  &user_emb_visual,     &user_emb_textual,
          &fusion_logits};
}

ModelState ModelState::xavier(std::size_t num_users, std::size_t raw_dim_v, std::size_t raw_dim_t,
                              std::size_t dim, std::mt19937_64& rng) {
  ModelState m;
  m.encoder_visual_weight = xavier_uniform(raw_dim_v, dim, rng);
  m.encoder_visual_bias = DenseMatrix(1, dim);
  m.encoder_textual_weight = xavier_uniform(raw_dim_t, dim, rng);
  m.encoder_textual_bias = DenseMatrix(1, dim);
  m.user_emb_visual = xavier_uniform(num_users, dim, rng);
  m.user_emb_textual = xavier_uniform(num_users, dim, rng);
  m.fusion_logits = DenseMatrix(1, 2);
  return m;
}

ModelState ModelState::zeros_like(const ModelState& other) {
  ModelState m;
  auto dst = m.tensors();
  auto src = other.tensors();
  for (std::size_t i = 0; i < kTensorCount; ++i) *dst[i] = DenseMatrix(src[i]->rows(), src[i]->cols());
  return m;
}

bool ModelState::all_finite() const {
  for (const auto* t : tensors()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

void ModelState::validate() const {
  const std::size_t d = dim();
  if (encoder_visual_bias.rows() != 1 || encoder_visual_bias.cols() != d ||
      encoder_textual_weight.cols() != d || encoder_textual_bias.rows() != 1 ||
      encoder_textual_bias.cols() != d || user_emb_visual.cols() != d ||
      user_emb_textual.cols() != d || user_emb_textual.rows() != user_emb_visual.rows() ||
      fusion_logits.rows() != 1 || fusion_logits.cols() != 2) {
    throw DimensionError("ModelState: inconsistent parameter shapes");
  }
}

std::pair<DenseMatrix, DenseMatrix> encode(const DenseMatrix& raw_v, const DenseMatrix& raw_t,
                                           const ModelState& m) {
  return {affine(raw_v, m.encoder_visual_weight, m.encoder_visual_bias),
          affine(raw_t, m.encoder_textual_weight, m.encoder_textual_bias)};
}

DenseMatrix propagate_layers(const DenseMatrix& x0, const graph::SparseMatrix& adjacency,
                             std::size_t layers) {
  if (adjacency.rows != x0.rows() || adjacency.cols != x0.rows()) {
    throw DimensionError("propagate: adjacency is " + std::to_string(adjacency.rows) + "x" +
                         std::to_string(adjacency.cols) + ", features have " +
                         std::to_string(x0.rows()) + " rows");
  }
  if (layers == 0) return x0;
  DenseMatrix sum = x0;
  DenseMatrix current = x0;
  for (std::size_t l = 0; l < layers; ++l) {
    current = adjacency.multiply(current);
    add_scaled(sum, 1.0, current);
  }
  const double inv = 1.0 / static_cast<double>(layers + 1);
  for (double& x : sum.values()) x *= inv;
  return sum;
}

DenseMatrix propagate_layers_backward(const DenseMatrix& grad_out,
                                      const graph::SparseMatrix& adjacency, std::size_t layers) {
  if (layers == 0) return grad_out;
  DenseMatrix g = grad_out;
  const double inv = 1.0 / static_cast<double>(layers + 1);
  for (double& x : g.values()) x *= inv;
  // Horner form of Σ_l (Âᵀ)^l g.
  DenseMatrix acc = g;
  for (std::size_t l = 0; l < layers; ++l) {
    acc = adjacency.multiply_transposed(acc);
    add_scaled(acc, 1.0, g);
  }
  return acc;
}

std::pair<DenseMatrix, DenseMatrix> propagate(const DenseMatrix& v_proj, const DenseMatrix& t_proj,
                                              const ModelState& m,
                                              const graph::SparseMatrix& adjacency,
                                              std::size_t layers) {
  return {propagate_layers(stack_rows(m.user_emb_visual, v_proj), adjacency, layers),
          propagate_layers(stack_rows(m.user_emb_textual, t_proj), adjacency, layers)};
}

std::array<double, 2> fusion_weights(const ModelState& m) {
  const double wv = m.fusion_logits(0, 0);
  const double wt = m.fusion_logits(0, 1);
  const double top = std::max(wv, wt);
  const double ev = std::exp(wv - top);
  const double et = std::exp(wt - top);
  return {ev / (ev + et), et / (ev + et)};
}

FusedEmbeddings fuse_and_score(const DenseMatrix& h_v, const DenseMatrix& h_t, const ModelState& m,
                               const GraphSet& g) {
  if (h_v.rows() != h_t.rows() || h_v.cols() != h_t.cols()) {
    throw DimensionError("fuse_and_score: modality representations differ in shape");
  }
  const std::size_t users = m.num_users();
  if (h_v.rows() < users) throw DimensionError("fuse_and_score: fewer rows than users");
  const std::size_t items = h_v.rows() - users;
  const auto [a_v, a_t] = fusion_weights(m);
  const double alpha = g.modality_graph_weight_alpha;

  FusedEmbeddings out{DenseMatrix(users, h_v.cols()), DenseMatrix(items, h_v.cols())};
  for (std::size_t u = 0; u < users; ++u) {
    auto o = out.user.row(u);
    auto hv = h_v.row(u);
    auto ht = h_t.row(u);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = a_v * hv[c] + a_t * ht[c];
  }
  DenseMatrix mixed(items, h_v.cols());
  for (std::size_t i = 0; i < items; ++i) {
    auto o = out.item.row(i);
    auto mx = mixed.row(i);
    auto hv = h_v.row(users + i);
    auto ht = h_t.row(users + i);
    for (std::size_t c = 0; c < o.size(); ++c) {
      o[c] = hv[c] + ht[c];
      mx[c] = alpha * hv[c] + (1.0 - alpha) * ht[c];
    }
  }
  if (!g.item_item.empty()) add_scaled(out.item, 1.0, g.item_item.multiply(mixed));
  return out;
}

BprResult bpr_loss(const DenseMatrix& user_emb, const DenseMatrix& item_emb,
                   const BatchTriplets& batch, const ModelState& m, double gamma) {
  BprResult r{0.0, 0.0, 0.0, DenseMatrix(user_emb.rows(), user_emb.cols()),
              DenseMatrix(item_emb.rows(), item_emb.cols())};
  for (const auto& t : batch) {
    if (t.user >= user_emb.rows() || t.pos_item >= item_emb.rows() || t.neg_item >= item_emb.rows()) {
      throw DimensionError("bpr_loss: triplet index out of range");
    }
    auto eu = user_emb.row(t.user);
    auto ep = item_emb.row(t.pos_item);
    auto en = item_emb.row(t.neg_item);
    const double margin = dot(eu, ep) - dot(eu, en);
    r.bpr += softplus_neg(margin);
    const double g = -sigmoid(-margin);  // d(−log σ(x))/dx
    auto gu = r.grad_user.row(t.user);
    auto gp = r.grad_item.row(t.pos_item);
    auto gn = r.grad_item.row(t.neg_item);
    for (std::size_t c = 0; c < eu.size(); ++c) {
      gu[c] += g * (ep[c] - en[c]);
      gp[c] += g * eu[c];
      gn[c] -= g * eu[c];
    }
  }
  r.reg = gamma * (squared_norm(m.user_emb_visual) + squared_norm(m.user_emb_textual) +
                   squared_norm(m.fusion_logits));
  r.loss = r.bpr + r.reg;
  return r;
}

ForwardPass forward(const ModelState& m, const PipelineContext& ctx) {
  if (ctx.raw_v == nullptr || ctx.raw_t == nullptr || ctx.graphs == nullptr) {
    throw InvalidInputError("forward: incomplete pipeline context");
  }
  ForwardPass f;
  std::tie(f.encoded_v, f.encoded_t) = encode(*ctx.raw_v, *ctx.raw_t, m);
  if (ctx.projectors != nullptr) {
    redundancy::RedundancyConfig cfg;
    cfg.center_before_project = ctx.center_before_project;
    std::tie(f.projected_v, f.projected_t) =
        redundancy::project_features(f.encoded_v, f.encoded_t, *ctx.projectors, cfg);
  } else {
    f.projected_v = f.encoded_v;
    f.projected_t = f.encoded_t;
  }
  std::tie(f.h_v, f.h_t) = propagate(f.projected_v, f.projected_t, m, ctx.graphs->ui_adjacency, ctx.layers);
  f.fused = fuse_and_score(f.h_v, f.h_t, m, *ctx.graphs);
  return f;
}

LossAndGradient loss_and_gradient(const ModelState& m, const PipelineContext& ctx,
                                  const BatchTriplets& batch, double gamma) {
  const ForwardPass f = forward(m, ctx);
  BprResult bpr = bpr_loss(f.fused.user, f.fused.item, batch, m, gamma);

  LossAndGradient out{bpr.loss, bpr.bpr, bpr.reg, ModelState::zeros_like(m)};
  ModelState& grad = out.grad;
  const std::size_t users = m.num_users();
  const std::size_t items = f.fused.item.rows();
  const std::size_t d = m.dim();
  const auto [a_v, a_t] = fusion_weights(m);
  const double alpha = ctx.graphs->modality_graph_weight_alpha;

  // Fusion: user rows and the softmax weights.
  DenseMatrix grad_hv(users + items, d);
  DenseMatrix grad_ht(users + items, d);
  double grad_av = 0.0;
  double grad_at = 0.0;
  for (std::size_t u = 0; u < users; ++u) {
    auto g = bpr.grad_user.row(u);
    auto hv = f.h_v.row(u);
    auto ht = f.h_t.row(u);
    auto ghv = grad_hv.row(u);
    auto ght = grad_ht.row(u);
    for (std::size_t c = 0; c < d; ++c) {
      ghv[c] = a_v * g[c];
      ght[c] = a_t * g[c];
      grad_av += g[c] * hv[c];
      grad_at += g[c] * ht[c];
    }
  }
  const double mean_grad = a_v * grad_av + a_t * grad_at;
  grad.fusion_logits(0, 0) = a_v * (grad_av - mean_grad);
  grad.fusion_logits(0, 1) = a_t * (grad_at - mean_grad);

  // Item rows: direct sum plus the item-item aggregate.
  DenseMatrix through_graph = ctx.graphs->item_item.empty()
                                  ? DenseMatrix(items, d)
                                  : ctx.graphs->item_item.multiply_transposed(bpr.grad_item);
  for (std::size_t i = 0; i < items; ++i) {
    auto g = bpr.grad_item.row(i);
    auto s = through_graph.row(i);
    auto ghv = grad_hv.row(users + i);
    auto ght = grad_ht.row(users + i);
    for (std::size_t c = 0; c < d; ++c) {
      ghv[c] = g[c] + alpha * s[c];
      ght[c] = g[c] + (1.0 - alpha) * s[c];
    }
  }

  const DenseMatrix grad_x0_v = propagate_layers_backward(grad_hv, ctx.graphs->ui_adjacency, ctx.layers);
  const DenseMatrix grad_x0_t = propagate_layers_backward(grad_ht, ctx.graphs->ui_adjacency, ctx.layers);

  grad.user_emb_visual = row_block(grad_x0_v, 0, users);
  grad.user_emb_textual = row_block(grad_x0_t, 0, users);
  DenseMatrix grad_proj_v = row_block(grad_x0_v, users, items);
  DenseMatrix grad_proj_t = row_block(grad_x0_t, users, items);

  // Projectors are constants: dV = dṼ·Pᵀ.
  DenseMatrix grad_enc_v = grad_proj_v;
  DenseMatrix grad_enc_t = grad_proj_t;
  if (ctx.projectors != nullptr) {
    if (!ctx.projectors->visual.is_identity()) grad_enc_v = matmul_nt(grad_proj_v, ctx.projectors->visual.matrix);
    if (!ctx.projectors->textual.is_identity()) grad_enc_t = matmul_nt(grad_proj_t, ctx.projectors->textual.matrix);
  }
  grad.encoder_visual_weight = matmul_tn(*ctx.raw_v, grad_enc_v);
  grad.encoder_textual_weight = matmul_tn(*ctx.raw_t, grad_enc_t);
  for (std::size_t i = 0; i < items; ++i) {
    auto gv = grad_enc_v.row(i);
    auto gt = grad_enc_t.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      grad.encoder_visual_bias(0, c) += gv[c];
      grad.encoder_textual_bias(0, c) += gt[c];
    }
  }

  // L2 terms.
  add_scaled(grad.user_emb_visual, 2.0 * gamma, m.user_emb_visual);
  add_scaled(grad.user_emb_textual, 2.0 * gamma, m.user_emb_textual);
  add_scaled(grad.fusion_logits, 2.0 * gamma, m.fusion_logits);
  return out;
}

AdamOptimizer::AdamOptimizer(const ModelState& shape, double lr, double beta1, double beta2, double eps)
    : lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(ModelState::zeros_like(shape)),
      v_(ModelState::zeros_like(shape)) {}

void AdamOptimizer::step(ModelState& params, const ModelState& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = params.tensors();
  auto g = grad.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t k = 0; k < ModelState::kTensorCount; ++k) {
    auto pv = p[k]->values();
    auto gv = g[k]->values();
    auto mv = m[k]->values();
    auto vv = v[k]->values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = beta1_ * mv[i] + (1.0 - beta1_) * gv[i];
      vv[i] = beta2_ * vv[i] + (1.0 - beta2_) * gv[i] * gv[i];
      const double m_hat = mv[i] / c1;
      const double v_hat = vv[i] / c2;
      pv[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

}  // namespace clear::model
