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

#include <doctest.h>

#include <cmath>
#include <random>

#include "clear/errors.hpp"
#include "clear/model.hpp"
#include "../support/test_support.hpp"

using namespace clear;

namespace {

double inner(const DenseMatrix& a, const DenseMatrix& b) { return dot(a.values(), b.values()); }

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto tm = testing::tiny_model(4, 6, 5, 1, seed);
    for (bool with_projection : {true, false}) {
      const auto check = testing::check_gradient(tm, with_projection, 1e-2);
      INFO("seed " << seed << " projection " << with_projection << " worst " << check.worst_tensor);
      CHECK(check.max_relative_error < 1e-4);
      CHECK(check.entries == 3 * 5 + 5 + 4 * 5 + 5 + 4 * 5 + 4 * 5 + 2);
    }
  }
  SUBCASE("two layers and centered projection") {
    auto tm = testing::tiny_model(4, 6, 5, 2, 9);
    const auto check = testing::check_gradient(tm, true, 1e-3);
    CHECK(check.max_relative_error < 1e-4);
  }
}

TEST_CASE("gradient with centered projection") {
  const auto tm = testing::tiny_model(3, 5, 4, 1, 12);
  auto ctx = tm.context(true);
  ctx.center_before_project = true;
  const auto analytic = model::loss_and_gradient(tm.state, ctx, tm.batch, 0.0);
  model::ModelState probe = tm.state;
  const double h = 1e-5;
  double worst = 0.0;
  auto& b = probe.encoder_textual_bias;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    const double saved = b(0, c);
    b(0, c) = saved + h;
    const double up = model::loss_and_gradient(probe, ctx, tm.batch, 0.0).loss;
    b(0, c) = saved - h;
    const double down = model::loss_and_gradient(probe, ctx, tm.batch, 0.0).loss;
    b(0, c) = saved;
    const double fd = (up - down) / (2 * h);
    const double g = analytic.grad.encoder_textual_bias(0, c);
    worst = std::max(worst, std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-6}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("propagation backward is the adjoint of the forward pass") {
  std::mt19937_64 rng(31);
  const auto tm = testing::tiny_model(4, 6, 3, 2, 5);
  const auto x = testing::gaussian(10, 3, rng);
  const auto g = testing::gaussian(10, 3, rng);
  for (std::size_t layers : {0u, 1u, 3u}) {
    const auto fx = model::propagate_layers(x, tm.graphs.ui_adjacency, layers);
    const auto bg = model::propagate_layers_backward(g, tm.graphs.ui_adjacency, layers);
    CHECK(inner(fx, g) == doctest::Approx(inner(x, bg)).epsilon(1e-12));
  }
  CHECK(model::propagate_layers(x, tm.graphs.ui_adjacency, 0) == x);

  // One layer is the mean of X and Â·X.
  const auto one = model::propagate_layers(x, tm.graphs.ui_adjacency, 1);
  const auto expected = 0.5 * (x + tm.graphs.ui_adjacency.multiply(x));
  CHECK(max_abs_diff(one, expected) < 1e-14);
}

TEST_CASE("loss value matches a direct evaluation of the objective") {
  const auto tm = testing::tiny_model(4, 6, 5, 1, 3);
  const double gamma = 0.05;
  const auto ctx = tm.context(true);
  const auto fwd = model::forward(tm.state, ctx);
  double bpr = 0.0;
  for (const auto& tr : tm.batch) {
    const double pos = dot(fwd.fused.user.row(tr.user), fwd.fused.item.row(tr.pos_item));
    const double neg = dot(fwd.fused.user.row(tr.user), fwd.fused.item.row(tr.neg_item));
    bpr += -std::log(1.0 / (1.0 + std::exp(-(pos - neg))));
  }
  const auto sq = [](const DenseMatrix& m) { return m.frobenius_norm() * m.frobenius_norm(); };
  const double reg = gamma * (sq(tm.state.user_emb_visual) + sq(tm.state.user_emb_textual) +
                              sq(tm.state.fusion_logits));
  const auto lg = model::loss_and_gradient(tm.state, ctx, tm.batch, gamma);
  CHECK(lg.bpr == doctest::Approx(bpr).epsilon(1e-12));
  CHECK(lg.reg == doctest::Approx(reg).epsilon(1e-12));
  CHECK(lg.loss == doctest::Approx(bpr + reg).epsilon(1e-12));
}

TEST_CASE("fusion weights and fused embeddings") {
  auto tm = testing::tiny_model(4, 6, 5, 1, 4);
  tm.state.fusion_logits(0, 0) = 1.0;
  tm.state.fusion_logits(0, 1) = -1.0;
  const auto w = model::fusion_weights(tm.state);
  CHECK(w[0] + w[1] == doctest::Approx(1.0));
  CHECK(w[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));

  std::mt19937_64 rng(2);
  const auto hv = testing::gaussian(10, 5, rng);
  const auto ht = testing::gaussian(10, 5, rng);
  const auto fused = model::fuse_and_score(hv, ht, tm.state, tm.graphs);
  const double a = tm.graphs.modality_graph_weight_alpha;
  const auto s = tm.graphs.item_item.to_dense();
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 5; ++c) {
      double refined = 0.0;
      for (std::size_t j = 0; j < 6; ++j) refined += s(i, j) * (a * hv(4 + j, c) + (1 - a) * ht(4 + j, c));
      CHECK(fused.item(i, c) == doctest::Approx(hv(4 + i, c) + ht(4 + i, c) + refined).epsilon(1e-12));
    }
  }
  for (std::size_t u = 0; u < 4; ++u) {
    CHECK(fused.user(u, 0) == doctest::Approx(w[0] * hv(u, 0) + w[1] * ht(u, 0)).epsilon(1e-12));
  }
}

TEST_CASE("xavier initialisation") {
  std::mt19937_64 a(5), b(5);
  const auto s1 = model::ModelState::xavier(7, 3, 4, 6, a);
  const auto s2 = model::ModelState::xavier(7, 3, 4, 6, b);
  CHECK(s1.encoder_visual_weight == s2.encoder_visual_weight);
  CHECK(s1.user_emb_textual == s2.user_emb_textual);
  CHECK(s1.encoder_visual_bias.max_abs() == 0.0);
  CHECK(s1.fusion_logits.max_abs() == 0.0);
  const double limit = std::sqrt(6.0 / (3.0 + 6.0));
  CHECK(s1.encoder_visual_weight.max_abs() <= limit);
  CHECK(s1.dim() == 6);
  CHECK(s1.num_users() == 7);
  CHECK_NOTHROW(s1.validate());
  auto broken = s1;
  broken.encoder_textual_bias = DenseMatrix(1, 5);
  CHECK_THROWS_AS(broken.validate(), DimensionError);
  const auto z = model::ModelState::zeros_like(s1);
  for (const auto* t : z.tensors()) CHECK(t->max_abs() == 0.0);
}

TEST_CASE("adam bias correction and descent") {
  std::mt19937_64 rng(6);
  auto state = model::ModelState::xavier(2, 2, 2, 2, rng);
  model::AdamOptimizer adam(state, 0.1);
  auto grad = model::ModelState::zeros_like(state);
  grad.fusion_logits(0, 0) = 3.0;
  grad.fusion_logits(0, 1) = -0.001;
  const auto before = state;
  adam.step(state, grad);
  // First bias-corrected step moves every nonzero-gradient entry by ~lr.
  CHECK(state.fusion_logits(0, 0) == doctest::Approx(before.fusion_logits(0, 0) - 0.1).epsilon(1e-6));
  CHECK(state.fusion_logits(0, 1) == doctest::Approx(before.fusion_logits(0, 1) + 0.1).epsilon(1e-4));
  CHECK(state.user_emb_visual == before.user_emb_visual);
  CHECK(adam.steps() == 1);

  // Minimise ½‖W‖² over the visual encoder weight.
  for (int i = 0; i < 300; ++i) {
    auto g = model::ModelState::zeros_like(state);
    g.encoder_visual_weight = state.encoder_visual_weight;
    adam.step(state, g);
  }
  CHECK(state.encoder_visual_weight.max_abs() < 0.05);
}
