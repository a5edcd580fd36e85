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

#include "clear/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "clear/errors.hpp"

namespace clear::data {

namespace {

DenseMatrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  DenseMatrix m(rows, cols);
  for (double& x : m.values()) x = normal(rng);
  return m;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_users == 0 || num_items == 0) throw InvalidInputError("synthetic: empty user or item set");
  if (shared_rank + specific_rank > std::min(dim_v, dim_t)) {
    throw InvalidInputError("synthetic: shared_rank + specific_rank exceeds the raw feature width");
  }
  if (!(shared_strength >= 0.0)) throw InvalidInputError("synthetic: shared_strength must be >= 0");
  if (interactions_per_user == 0 || interactions_per_user > num_items) {
    throw InvalidInputError("synthetic: interactions_per_user must lie in [1, num_items]");
  }
  if (!(noise >= 0.0) || !(gumbel_scale >= 0.0)) {
    throw InvalidInputError("synthetic: noise scales must be >= 0");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.num_items;
  const double rs = static_cast<double>(std::max<std::size_t>(spec.shared_rank, 1));
  const double rm = static_cast<double>(std::max<std::size_t>(spec.specific_rank, 1));

  const DenseMatrix z_shared = gaussian(n, spec.shared_rank, 1.0, rng);
  const DenseMatrix z_v = gaussian(n, spec.specific_rank, 1.0, rng);
  const DenseMatrix z_t = gaussian(n, spec.specific_rank, 1.0, rng);
  // Mixing matrices scaled so every raw coordinate gets unit variance per block.
  const DenseMatrix mix_shared_v = gaussian(spec.shared_rank, spec.dim_v, 1.0 / std::sqrt(rs), rng);
  const DenseMatrix mix_shared_t = gaussian(spec.shared_rank, spec.dim_t, 1.0 / std::sqrt(rs), rng);
  const DenseMatrix mix_v = gaussian(spec.specific_rank, spec.dim_v, 1.0 / std::sqrt(rm), rng);
  const DenseMatrix mix_t = gaussian(spec.specific_rank, spec.dim_t, 1.0 / std::sqrt(rm), rng);

  DenseMatrix raw_v = spec.shared_strength * matmul(z_shared, mix_shared_v) + matmul(z_v, mix_v) +
                      gaussian(n, spec.dim_v, spec.noise, rng);
  DenseMatrix raw_t = spec.shared_strength * matmul(z_shared, mix_shared_t) + matmul(z_t, mix_t) +
                      gaussian(n, spec.dim_t, spec.noise, rng);

  const DenseMatrix taste_v = gaussian(spec.num_users, spec.specific_rank, 1.0, rng);
  const DenseMatrix taste_t = gaussian(spec.num_users, spec.specific_rank, 1.0, rng);
  const DenseMatrix taste_shared = gaussian(spec.num_users, spec.shared_rank, 1.0, rng);

  const double specific_scale = 1.0 / std::sqrt(2.0 * rm);
  const double shared_scale =
      spec.preference == PreferenceSource::kMixed ? spec.shared_weight / std::sqrt(rs) : 0.0;

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Interaction> interactions;
  interactions.reserve(spec.num_users * spec.interactions_per_user);
  std::vector<double> score(n);
  std::vector<std::uint32_t> order(n);
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = specific_scale * (dot(taste_v.row(u), z_v.row(i)) + dot(taste_t.row(u), z_t.row(i)));
      if (shared_scale != 0.0) s += shared_scale * dot(taste_shared.row(u), z_shared.row(i));
      double g = uniform(rng);
      g = std::max(g, 1e-300);
      s += spec.gumbel_scale * -std::log(-std::log(g));
      score[i] = s;
    }
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.interactions_per_user),
                      order.end(), [&](std::uint32_t a, std::uint32_t b) {
                        return score[a] > score[b] || (score[a] == score[b] && a < b);
                      });
    for (std::size_t r = 0; r < spec.interactions_per_user; ++r) {
      interactions.push_back({static_cast<std::uint32_t>(u), order[r]});
    }
  }
  return {std::move(raw_v), std::move(raw_t), std::move(interactions)};
}

}  // namespace clear::data
