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
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "clear/dense_matrix.hpp"
#include "clear/redundancy.hpp"

namespace clear::diagnostics {

struct OverlapPoint {
  std::size_t k = 0;
  double mean_overlap_ratio = 0.0;
  double random_expectation = 0.0;  // K / (N − 1)
  double std_error = 0.0;           // sample std of per-anchor overlap / √anchors
  /// Standard error of the mean under independent modalities: per-anchor shared
  /// counts are hypergeometric (population N − 1, K marked, K drawn).
  double random_std_error = 0.0;
};

/// Mean fraction of shared top-K cosine neighbours (anchor excluded) between
/// the two modalities. Empty `anchors` means every item. Throws
/// InvalidInputError when some K ≥ N.
std::vector<OverlapPoint> retrieval_overlap(const DenseMatrix& v, const DenseMatrix& t,
                                            const std::vector<std::size_t>& ks,
                                            const std::vector<std::size_t>& anchors = {});

/// Seeded uniform anchor subsample without replacement, sorted ascending
/// (all items when count ≥ n).
std::vector<std::size_t> subsample_anchors(std::size_t n, std::size_t count, std::uint64_t seed);

/// Sliced Wasserstein distance: mean over `n_directions` seeded unit
/// directions of the 1-D W1 between sorted projections. When the row counts
/// differ the larger set is subsampled uniformly to the smaller size.
double sliced_wasserstein(const DenseMatrix& v, const DenseMatrix& t, std::size_t n_directions,
                          std::uint64_t seed);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> density;  // integrates to 1 over [lo, hi]
};

/// Density of pairwise cosine similarities (distinct pairs, at most
/// `max_pairs`, sampled with `seed` beyond that).
Histogram similarity_density(const DenseMatrix& features, std::size_t bins = 50,
                             std::size_t max_pairs = 200000, std::uint64_t seed = 0);

struct SpectrumReport {
  std::vector<double> spectrum_before;        // σ(C), nonincreasing
  std::vector<double> spectrum_after;         // σ(C̃), nonincreasing
  std::vector<double> spectrum_after_paired;  // uᵢᵀ·C̃·wᵢ along the original directions
  double frobenius_ratio = 1.0;
  /// max_i |σ̃ᵢ − predictedᵢ| / predictedᵢ over both sorted and paired forms,
  /// predicted = (1−λ)²σᵢ (i ≤ k) else σᵢ; entries with predicted ≤ 1e-12·σ₁
  /// are compared absolutely against σ₁.
  double max_law_deviation = 0.0;
  std::size_t rank_k = 0;
  double strength_lambda = 0.0;
};

SpectrumReport spectrum_report(const DenseMatrix& v, const DenseMatrix& t,
                               const redundancy::ProjectionPair& pair,
                               const redundancy::RedundancyConfig& cfg);

struct DiagnosticsReport {
  std::vector<OverlapPoint> overlap_curve;
  Histogram density_visual;
  Histogram density_textual;
  SpectrumReport spectrum;
  double swd_before = 0.0;
  double swd_after = 0.0;
};

nlohmann::ordered_json to_json(const SpectrumReport& report);
nlohmann::ordered_json to_json(const DiagnosticsReport& report);

/// Writes overlap.csv, spectrum.csv and densities.csv into `dir`.
void write_csvs(const DiagnosticsReport& report, const std::filesystem::path& dir);

/// Two leading principal-component coordinates per row (external plotting hook).
DenseMatrix principal_coordinates(const DenseMatrix& features);

}  // namespace clear::diagnostics
