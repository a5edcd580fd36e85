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

#include "clear/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "clear/errors.hpp"
#include "clear/spectral.hpp"

namespace clear::diagnostics {

namespace {

DenseMatrix select_rows(const DenseMatrix& m, const std::vector<std::size_t>& rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> predicted_spectrum(const std::vector<double>& sigma, std::size_t k,
                                           double lambda) {
  std::vector<double> p = sigma;
  const double shrink = (1.0 - lambda) * (1.0 - lambda);
  for (std::size_t i = 0; i < std::min(k, p.size()); ++i) p[i] *= shrink;
  return p;
}

double law_deviation(const std::vector<double>& observed, const std::vector<double>& predicted,
                     double sigma_max) {
  double worst = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double diff = std::abs(observed[i] - predicted[i]);
    const double scale = predicted[i] > 1e-12 * sigma_max ? predicted[i] : sigma_max;
    if (scale > 0.0) worst = std::max(worst, diff / scale);
  }
  return worst;
}

}  // namespace

std::vector<OverlapPoint> retrieval_overlap(const DenseMatrix& v, const DenseMatrix& t,
                                            const std::vector<std::size_t>& ks,
                                            const std::vector<std::size_t>& anchors) {
  if (v.rows() != t.rows()) throw DimensionError("retrieval_overlap: item counts differ");
  const std::size_t n = v.rows();
  if (ks.empty()) throw InvalidInputError("retrieval_overlap: no K values");
  for (std::size_t k : ks) {
    if (k == 0 || k >= n) {
      throw InvalidInputError("retrieval_overlap: K=" + std::to_string(k) + " must lie in [1, N) with N=" +
                              std::to_string(n));
    }
  }
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  std::vector<std::size_t> anchor_list = anchors;
  if (anchor_list.empty()) {
    anchor_list.resize(n);
    std::iota(anchor_list.begin(), anchor_list.end(), 0);
  }

  auto unit = [](const DenseMatrix& m) {
    DenseMatrix u = m;
    for (std::size_t r = 0; r < u.rows(); ++r) {
      auto row = u.row(r);
      const double norm = std::sqrt(dot(row, row));
      if (norm > 0.0) {
        for (double& x : row) x /= norm;
      }
    }
    return u;
  };
  const DenseMatrix uv = unit(v);
  const DenseMatrix ut = unit(t);

  auto neighbours = [&](const DenseMatrix& u, std::size_t a, std::vector<double>& sim,
                        std::vector<std::uint32_t>& order) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      sim[j] = dot(u.row(a), u.row(j));
      order.push_back(static_cast<std::uint32_t>(j));
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_max), order.end(),
                      [&](std::uint32_t x, std::uint32_t y) {
                        return sim[x] > sim[y] || (sim[x] == sim[y] && x < y);
                      });
    order.resize(k_max);
  };

  std::vector<double> sum(ks.size(), 0.0);
  std::vector<double> sum_sq(ks.size(), 0.0);
  std::vector<double> sim(n);
  std::vector<std::uint32_t> nv;
  std::vector<std::uint32_t> nt;
  std::vector<char> in_v(n, 0);
  for (std::size_t a : anchor_list) {
    if (a >= n) throw InvalidInputError("retrieval_overlap: anchor out of range");
    neighbours(uv, a, sim, nv);
    neighbours(ut, a, sim, nt);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const std::size_t k = ks[j];
      for (std::size_t r = 0; r < k; ++r) in_v[nv[r]] = 1;
      std::size_t shared = 0;
      for (std::size_t r = 0; r < k; ++r) shared += in_v[nt[r]] != 0 ? 1 : 0;
      for (std::size_t r = 0; r < k; ++r) in_v[nv[r]] = 0;
      const double ratio = static_cast<double>(shared) / static_cast<double>(k);
      sum[j] += ratio;
      sum_sq[j] += ratio * ratio;
    }
  }
  const double count = static_cast<double>(anchor_list.size());
  std::vector<OverlapPoint> out;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const double mean = sum[j] / count;
    const double var = count > 1 ? std::max(0.0, (sum_sq[j] - count * mean * mean) / (count - 1)) : 0.0;
    const double pop = static_cast<double>(n - 1);
    const double k = static_cast<double>(ks[j]);
    const double null_var =
        n > 2 ? k * (k / pop) * ((pop - k) / pop) * ((pop - k) / (pop - 1.0)) / (k * k) : 0.0;
    out.push_back({ks[j], mean, k / pop, std::sqrt(var / count), std::sqrt(null_var / count)});
  }
  return out;
}

std::vector<std::size_t> subsample_anchors(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::mt19937_64 rng(seed);
  return sample_without_replacement(n, count, rng);
}

double sliced_wasserstein(const DenseMatrix& v, const DenseMatrix& t, std::size_t n_directions,
                          std::uint64_t seed) {
  if (v.cols() != t.cols()) throw DimensionError("sliced_wasserstein: feature widths differ");
  if (v.rows() == 0 || t.rows() == 0) throw InvalidInputError("sliced_wasserstein: empty sample");
  if (n_directions == 0) throw InvalidInputError("sliced_wasserstein: need at least one direction");
  const std::size_t d = v.cols();

  std::mt19937_64 direction_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> directions;
  directions.reserve(n_directions);
  while (directions.size() < n_directions) {
    std::vector<double> theta(d);
    for (double& x : theta) x = normal(direction_rng);
    const double norm = std::sqrt(dot(theta, theta));
    if (norm == 0.0) continue;
    for (double& x : theta) x /= norm;
    directions.push_back(std::move(theta));
  }

  const DenseMatrix* a = &v;
  const DenseMatrix* b = &t;
  DenseMatrix reduced;
  if (v.rows() != t.rows()) {
    std::mt19937_64 subsample_rng(seed ^ 0x9E3779B97F4A7C15ULL);
    const bool v_larger = v.rows() > t.rows();
    const DenseMatrix& larger = v_larger ? v : t;
    const std::size_t target = std::min(v.rows(), t.rows());
    reduced = select_rows(larger, sample_without_replacement(larger.rows(), target, subsample_rng));
    (v_larger ? a : b) = &reduced;
  }

  const std::size_t n = a->rows();
  std::vector<double> pa(n);
  std::vector<double> pb(n);
  double total = 0.0;
  for (const auto& theta : directions) {
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = dot(a->row(i), theta);
      pb[i] = dot(b->row(i), theta);
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double w1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) w1 += std::abs(pa[i] - pb[i]);
    total += w1 / static_cast<double>(n);
  }
  return total / static_cast<double>(n_directions);
}

Histogram similarity_density(const DenseMatrix& features, std::size_t bins, std::size_t max_pairs,
                             std::uint64_t seed) {
  if (bins == 0) throw InvalidInputError("similarity_density: bins must be positive");
  Histogram h;
  h.density.assign(bins, 0.0);
  const std::size_t n = features.rows();
  if (n < 2) return h;
  DenseMatrix unit = features;
  for (std::size_t r = 0; r < n; ++r) {
    auto row = unit.row(r);
    const double norm = std::sqrt(dot(row, row));
    if (norm > 0.0) {
      for (double& x : row) x /= norm;
    }
  }
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  std::size_t counted = 0;
  auto add = [&](std::size_t i, std::size_t j) {
    const double s = std::clamp(dot(unit.row(i), unit.row(j)), h.lo, h.hi);
    const auto bin = std::min(bins - 1, static_cast<std::size_t>((s - h.lo) / width));
    h.density[bin] += 1.0;
    ++counted;
  };
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (all_pairs <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) add(i, j);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (counted < max_pairs) {
      const std::size_t i = pick(rng);
      const std::size_t j = pick(rng);
      if (i != j) add(i, j);
    }
  }
  for (double& x : h.density) x /= static_cast<double>(counted) * width;
  return h;
}

SpectrumReport spectrum_report(const DenseMatrix& v, const DenseMatrix& t,
                               const redundancy::ProjectionPair& pair,
                               const redundancy::RedundancyConfig& cfg) {
  const auto vc = spectral::mean_center(v);
  const auto tc = spectral::mean_center(t);
  const DenseMatrix c = spectral::cross_covariance(vc.centered, tc.centered);
  const auto before = spectral::svd(c);
  const DenseMatrix c_tilde = redundancy::projected_covariance(v, t, pair, cfg);
  const auto after = spectral::svd(c_tilde);

  SpectrumReport r;
  r.rank_k = pair.rank();
  r.strength_lambda = pair.strength();
  r.spectrum_before = before.singular_values;
  r.spectrum_after = after.singular_values;
  const std::size_t d = c.rows();
  // uᵢᵀ·C̃·wᵢ
  const DenseMatrix rotated = matmul(matmul_tn(before.left_vectors, c_tilde), before.right_vectors);
  r.spectrum_after_paired.resize(d);
  for (std::size_t i = 0; i < d; ++i) r.spectrum_after_paired[i] = rotated(i, i);

  const double norm_before = c.frobenius_norm();
  r.frobenius_ratio = norm_before == 0.0 ? 1.0 : c_tilde.frobenius_norm() / norm_before;

  const std::vector<double> predicted = predicted_spectrum(r.spectrum_before, r.rank_k, r.strength_lambda);
  std::vector<double> predicted_sorted = predicted;
  std::sort(predicted_sorted.begin(), predicted_sorted.end(), std::greater<>());
  const double sigma_max = r.spectrum_before.empty() ? 0.0 : r.spectrum_before.front();
  r.max_law_deviation = std::max(law_deviation(r.spectrum_after, predicted_sorted, sigma_max),
                                 law_deviation(r.spectrum_after_paired, predicted, sigma_max));
  return r;
}

nlohmann::ordered_json to_json(const SpectrumReport& s) {
  nlohmann::ordered_json j;
  j["rank_k"] = s.rank_k;
  j["strength_lambda"] = s.strength_lambda;
  j["spectrum_before"] = s.spectrum_before;
  j["spectrum_after"] = s.spectrum_after;
  j["spectrum_after_paired"] = s.spectrum_after_paired;
  j["max_law_deviation"] = s.max_law_deviation;
  j["frobenius_ratio"] = s.frobenius_ratio;
  return j;
}

nlohmann::ordered_json to_json(const DiagnosticsReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& p : report.overlap_curve) {
    nlohmann::ordered_json e;
    e["k"] = p.k;
    e["mean_overlap_ratio"] = p.mean_overlap_ratio;
    e["random_expectation"] = p.random_expectation;
    e["std_error"] = p.std_error;
    e["random_std_error"] = p.random_std_error;
    curve.push_back(e);
  }
  j["overlap_curve"] = curve;
  auto hist = [](const Histogram& h) {
    nlohmann::ordered_json e;
    e["lo"] = h.lo;
    e["hi"] = h.hi;
    e["density"] = h.density;
    return e;
  };
  j["similarity_densities"] = {{"visual", hist(report.density_visual)},
                               {"textual", hist(report.density_textual)}};
  const auto& s = report.spectrum;
  j["rank_k"] = s.rank_k;
  j["strength_lambda"] = s.strength_lambda;
  j["spectrum_before"] = s.spectrum_before;
  j["spectrum_after"] = s.spectrum_after;
  j["spectrum_after_paired"] = s.spectrum_after_paired;
  j["max_law_deviation"] = s.max_law_deviation;
  j["swd_before"] = report.swd_before;
  j["swd_after"] = report.swd_after;
  j["frobenius_ratio"] = s.frobenius_ratio;
  return j;
}

void write_csvs(const DiagnosticsReport& report, const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    out.precision(17);
    return out;
  };
  {
    auto out = open("overlap.csv");
    out << "k,mean_overlap_ratio,random_expectation,std_error,random_std_error\n";
    for (const auto& p : report.overlap_curve) {
      out << p.k << ',' << p.mean_overlap_ratio << ',' << p.random_expectation << ',' << p.std_error << ','
          << p.random_std_error << '\n';
    }
  }
  {
    auto out = open("spectrum.csv");
    out << "index,before,after,after_paired\n";
    const auto& s = report.spectrum;
    for (std::size_t i = 0; i < s.spectrum_before.size(); ++i) {
      out << i + 1 << ',' << s.spectrum_before[i] << ',' << s.spectrum_after[i] << ','
          << s.spectrum_after_paired[i] << '\n';
    }
  }
  {
    auto out = open("densities.csv");
    out << "bin_center,visual,textual\n";
    const auto& hv = report.density_visual;
    const auto& ht = report.density_textual;
    const double width = (hv.hi - hv.lo) / static_cast<double>(std::max<std::size_t>(hv.density.size(), 1));
    for (std::size_t b = 0; b < hv.density.size(); ++b) {
      out << hv.lo + (static_cast<double>(b) + 0.5) * width << ',' << hv.density[b] << ','
          << (b < ht.density.size() ? ht.density[b] : 0.0) << '\n';
    }
  }
}

DenseMatrix principal_coordinates(const DenseMatrix& features) {
  const auto centered = spectral::mean_center(features);
  const DenseMatrix cov = spectral::cross_covariance(centered.centered, centered.centered);
  const auto decomposition = spectral::svd(cov);
  const std::size_t keep = std::min<std::size_t>(2, features.cols());
  DenseMatrix coords = matmul(centered.centered, decomposition.left_vectors.left_columns(keep));
  if (keep == 2) return coords;
  DenseMatrix padded(features.rows(), 2);
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < keep; ++c) padded(r, c) = coords(r, c);
  return padded;
}

}  // namespace clear::diagnostics
