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
#include <utility>
#include <vector>

#include "clear/dense_matrix.hpp"
#include "clear/spectral.hpp"

namespace clear::redundancy {

enum class RankMode { kFixed, kDynamicRatio };

struct RedundancyConfig {
  /// false reproduces the "w/o null-space" ablation: no projectors are fitted.
  bool enabled = true;
  std::size_t rank_k = 4;
  double strength_lambda = 0.9;
  std::size_t refresh_interval_tau = 1;
  RankMode rank_mode = RankMode::kFixed;
  double energy_threshold = 0.5;
  bool center_before_project = false;

  /// Throws ConfigError on an invalid combination. `dim` is the encoded width.
  void validate(std::size_t dim) const;
};

/// Cached pair of projectors plus the cross-covariance spectrum they came from.
struct ProjectionPair {
  spectral::ProjectionOperator visual;
  spectral::ProjectionOperator textual;
  std::size_t epoch_built = 0;
  std::vector<double> spectrum;
  std::vector<double> mean_visual;
  std::vector<double> mean_textual;

  std::size_t rank() const { return visual.rank_k; }
  double strength() const { return visual.strength_lambda; }
};

/// Identity projectors of width d (what the pipeline uses before the first fit).
ProjectionPair identity_pair(std::size_t d);

/// Centers, builds the cross-covariance, runs the SVD on a plain-value copy and
/// builds both projectors with the rank chosen by `cfg.rank_mode`.
ProjectionPair fit_projectors(const DenseMatrix& v_encoded, const DenseMatrix& t_encoded,
                              const RedundancyConfig& cfg, std::size_t epoch = 0);

/// Smallest k whose leading squared singular values reach `energy_threshold`
/// of the total energy; 0 for an all-zero spectrum.
std::size_t select_rank_dynamic(const std::vector<double>& spectrum, double energy_threshold);

std::pair<DenseMatrix, DenseMatrix> project_features(const DenseMatrix& v, const DenseMatrix& t,
                                                     const ProjectionPair& pair,
                                                     const RedundancyConfig& cfg);

/// Projection refresh guard for 1-based epochs: `e mod τ = 0 or e = 1`.
bool should_refresh(std::size_t epoch, std::size_t tau);

/// Cross-covariance of the (centered) projected features.
DenseMatrix projected_covariance(const DenseMatrix& v, const DenseMatrix& t,
                                 const ProjectionPair& pair, const RedundancyConfig& cfg);

/// ‖C̃‖_F / ‖C‖_F for the given raw (unprojected) features; 1 when ‖C‖_F = 0.
double frobenius_ratio(const DenseMatrix& v, const DenseMatrix& t, const ProjectionPair& pair,
                       const RedundancyConfig& cfg);

}  // namespace clear::redundancy
