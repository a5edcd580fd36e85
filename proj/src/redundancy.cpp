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

#include "clear/redundancy.hpp"

#include <string>

#include "clear/errors.hpp"

namespace clear::redundancy {

using spectral::Side;

void RedundancyConfig::validate(std::size_t dim) const {
  if (refresh_interval_tau < 1) throw ConfigError("redundancy: refresh interval must be >= 1");
  if (!(strength_lambda >= 0.0 && strength_lambda <= 1.0)) {
    throw ConfigError("redundancy: lambda must lie in [0, 1]");
  }
  if (rank_mode == RankMode::kFixed && rank_k > dim) {
    throw ConfigError("redundancy: rank_k " + std::to_string(rank_k) + " exceeds dimension " +
                      std::to_string(dim));
  }
  if (rank_mode == RankMode::kDynamicRatio && !(energy_threshold > 0.0 && energy_threshold < 1.0)) {
    throw ConfigError("redundancy: energy_threshold must lie in (0, 1)");
  }
}

ProjectionPair identity_pair(std::size_t d) {
  const DenseMatrix eye = DenseMatrix::identity(d);
  return ProjectionPair{spectral::build_projector(eye, 0, 0.0, Side::kVisual),
                        spectral::build_projector(eye, 0, 0.0, Side::kTextual),
                        0,
                        std::vector<double>(d, 0.0),
                        std::vector<double>(d, 0.0),
                        std::vector<double>(d, 0.0)};
}

std::size_t select_rank_dynamic(const std::vector<double>& spectrum, double energy_threshold) {
  double total = 0.0;
  for (double s : spectrum) total += s * s;
  if (total == 0.0) return 0;
  double running = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    running += spectrum[i] * spectrum[i];
    if (running >= energy_threshold * total) return i + 1;
  }
  return spectrum.size();
}

ProjectionPair fit_projectors(const DenseMatrix& v_encoded, const DenseMatrix& t_encoded,
                              const RedundancyConfig& cfg, std::size_t epoch) {
  if (v_encoded.rows() != t_encoded.rows()) {
    throw DimensionError("fit_projectors: row counts differ");
  }
  if (v_encoded.cols() != t_encoded.cols()) {
    throw DimensionError("fit_projectors: encoded widths " + std::to_string(v_encoded.cols()) +
                         " and " + std::to_string(t_encoded.cols()) + " differ");
  }
  auto vc = spectral::mean_center(v_encoded);
  auto tc = spectral::mean_center(t_encoded);
  // Plain values only: nothing computed here is ever differentiated.
  const DenseMatrix c = spectral::cross_covariance(vc.centered, tc.centered);
  const spectral::SvdResult decomposition = spectral::svd(c);

  std::size_t k = cfg.rank_k;
  if (cfg.rank_mode == RankMode::kDynamicRatio) {
    k = select_rank_dynamic(decomposition.singular_values, cfg.energy_threshold);
  }
  return ProjectionPair{
      spectral::build_projector(decomposition.left_vectors, k, cfg.strength_lambda, Side::kVisual),
      spectral::build_projector(decomposition.right_vectors, k, cfg.strength_lambda,
                                Side::kTextual),
      epoch,
      decomposition.singular_values,
      std::move(vc.mean),
      std::move(tc.mean)};
}

namespace {

DenseMatrix project_one(const DenseMatrix& x, const spectral::ProjectionOperator& p,
                        const std::vector<double>& mean, bool center) {
  if (!center || p.is_identity()) return spectral::apply_projection(x, p);
  if (mean.size() != x.cols()) throw DimensionError("project_features: stored mean width mismatch");
  DenseMatrix shifted = x;
  for (std::size_t r = 0; r < shifted.rows(); ++r) {
    auto row = shifted.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= mean[c];
  }
  DenseMatrix out = spectral::apply_projection(shifted, p);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += mean[c];
  }
  return out;
}

}  // namespace

std::pair<DenseMatrix, DenseMatrix> project_features(const DenseMatrix& v, const DenseMatrix& t,
                                                     const ProjectionPair& pair,
                                                     const RedundancyConfig& cfg) {
  return {project_one(v, pair.visual, pair.mean_visual, cfg.center_before_project),
          project_one(t, pair.textual, pair.mean_textual, cfg.center_before_project)};
}

bool should_refresh(std::size_t epoch, std::size_t tau) {
  return epoch == 1 || (tau > 0 && epoch % tau == 0);
}

DenseMatrix projected_covariance(const DenseMatrix& v, const DenseMatrix& t,
                                 const ProjectionPair& pair, const RedundancyConfig& cfg) {
  auto [pv, pt] = project_features(v, t, pair, cfg);
  return spectral::cross_covariance(spectral::mean_center(pv).centered,
                                    spectral::mean_center(pt).centered);
}

double frobenius_ratio(const DenseMatrix& v, const DenseMatrix& t, const ProjectionPair& pair,
                       const RedundancyConfig& cfg) {
  const double before = spectral::cross_covariance(spectral::mean_center(v).centered,
                                                   spectral::mean_center(t).centered)
                            .frobenius_norm();
  if (before == 0.0) return 1.0;
  return projected_covariance(v, t, pair, cfg).frobenius_norm() / before;
}

}  // namespace clear::redundancy
