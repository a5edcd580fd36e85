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
#include <vector>

#include "clear/dataset.hpp"
#include "clear/dense_matrix.hpp"

namespace clear::data {

enum class PreferenceSource { kSpecificOnly, kMixed };

/// Parameters of the planted-redundancy generator.
///
/// Items carry a shared latent block Z_s seen by both modalities and one
/// private block per modality. User tastes live in the private blocks (plus
/// the shared one, weighted, when `preference` is kMixed), so with
/// kSpecificOnly the shared subspace carries no preference signal.
struct SyntheticSpec {
  std::size_t num_users = 500;
  std::size_t num_items = 800;
  std::size_t dim_v = 64;
  std::size_t dim_t = 48;
  std::size_t shared_rank = 4;
  std::size_t specific_rank = 8;
  double shared_strength = 3.0;
  PreferenceSource preference = PreferenceSource::kSpecificOnly;
  double shared_weight = 0.5;
  std::size_t interactions_per_user = 20;
  double noise = 0.1;
  double gumbel_scale = 0.3;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticData {
  DenseMatrix raw_v;  // N×dim_v
  DenseMatrix raw_t;  // N×dim_t
  std::vector<Interaction> interactions;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace clear::data
