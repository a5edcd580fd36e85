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

#include "clear/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "clear/errors.hpp"

namespace clear::spectral {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kRotationTolerance = 1e-15;

using Column = std::vector<double>;

double norm(const Column& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double column_dot(const Column& a, const Column& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void rotate(Column& p, Column& q, double c, double s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double xp = p[i];
    const double xq = q[i];
    p[i] = c * xp - s * xq;
    q[i] = s * xp + c * xq;
  }
}

// Orthonormal completion: a unit vector orthogonal to all of `basis`, built
// from the canonical axis with the largest residual (lowest index on ties).
// Some axis always keeps at least (d - |basis|)/d of its squared length.
Column complete_against(const std::vector<Column>& basis, std::size_t d) {
  Column best;
  double best_norm = 0.0;
  for (std::size_t axis = 0; axis < d; ++axis) {
    Column x(d, 0.0);
    x[axis] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double proj = column_dot(b, x);
        for (std::size_t i = 0; i < d; ++i) x[i] -= proj * b[i];
      }
    }
    const double n = norm(x);
    if (n > best_norm) {
      best_norm = n;
      best = std::move(x);
    }
  }
  if (best_norm < 1e-6) throw InvalidInputError("svd: basis completion failed");
  for (double& v : best) v /= best_norm;
  return best;
}

}  // namespace

std::string_view to_string(Side side) {
  return side == Side::kVisual ? "visual" : "textual";
}

CenteredMatrix mean_center(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInputError("mean_center: empty matrix");
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
  }
  for (double& x : mean) x /= static_cast<double>(n);
  DenseMatrix centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto in = m.row(r);
    auto out = centered.row(r);
    for (std::size_t c = 0; c < d; ++c) out[c] = in[c] - mean[c];
  }
  return {std::move(centered), std::move(mean)};
}

DenseMatrix cross_covariance(const DenseMatrix& v_centered, const DenseMatrix& t_centered) {
  if (v_centered.rows() != t_centered.rows()) {
    throw DimensionError("cross_covariance: row counts " + std::to_string(v_centered.rows()) +
                         " and " + std::to_string(t_centered.rows()) + " differ");
  }
  if (v_centered.rows() == 0) throw InvalidInputError("cross_covariance: no samples");
  DenseMatrix c = matmul_tn(v_centered, t_centered);
  const double inv_n = 1.0 / static_cast<double>(v_centered.rows());
  for (double& x : c.values()) x *= inv_n;
  return c;
}

SvdResult svd(const DenseMatrix& c) {
  if (c.rows() != c.cols()) {
    throw DimensionError("svd: expected a square matrix, got " + std::to_string(c.rows()) + "x" +
                         std::to_string(c.cols()));
  }
  if (!c.all_finite()) throw InvalidInputError("svd: non-finite entries");
  const std::size_t d = c.rows();

  // Column-major working copies: a starts as C, v as I; A·V stays = C·V.
  std::vector<Column> a(d, Column(d));
  std::vector<Column> v(d, Column(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) a[j][i] = c(i, j);
    v[j][j] = 1.0;
  }

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double alpha = column_dot(a[p], a[p]);
        const double beta = column_dot(a[q], a[q]);
        const double gamma = column_dot(a[p], a[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kRotationTolerance * std::sqrt(alpha * beta)) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        rotate(a[p], a[q], cs, sn);
        rotate(v[p], v[q], cs, sn);
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(d);
  for (std::size_t j = 0; j < d; ++j) sigma[j] = norm(a[j]);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double sigma_max = d == 0 ? 0.0 : sigma[order[0]];
  const double negligible = sigma_max * static_cast<double>(d) * std::numeric_limits<double>::epsilon();

  std::vector<Column> left(d);
  std::vector<Column> right(d);
  std::vector<double> values(d);
  std::vector<std::size_t> pending;
  std::vector<Column> accepted;
  for (std::size_t slot = 0; slot < d; ++slot) {
    const std::size_t j = order[slot];
    values[slot] = sigma[j];
    right[slot] = v[j];
    if (sigma[j] > negligible && sigma[j] > 0.0) {
      left[slot] = a[j];
      for (double& x : left[slot]) x /= sigma[j];
      accepted.push_back(left[slot]);
    } else {
      pending.push_back(slot);
    }
  }
  for (std::size_t slot : pending) {
    left[slot] = complete_against(accepted, d);
    accepted.push_back(left[slot]);
  }

  for (std::size_t slot = 0; slot < d; ++slot) {
    auto& u = left[slot];
    auto first = std::find_if(u.begin(), u.end(), [](double x) { return std::abs(x) > 1e-12; });
    if (first != u.end() && *first < 0.0) {
      for (double& x : u) x = -x;
      for (double& x : right[slot]) x = -x;
    }
  }

  SvdResult out{DenseMatrix(d, d), std::move(values), DenseMatrix(d, d)};
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      out.left_vectors(i, j) = left[j][i];
      out.right_vectors(i, j) = right[j][i];
    }
  }
  return out;
}

ProjectionOperator build_projector(const DenseMatrix& basis_full, std::size_t k, double lambda,
                                   Side side) {
  const std::size_t d = basis_full.rows();
  if (k > d || k > basis_full.cols()) {
    throw InvalidRankError("build_projector: rank " + std::to_string(k) + " exceeds dimension " +
                           std::to_string(d));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidStrengthError("build_projector: strength " + std::to_string(lambda) +
                               " outside [0, 1]");
  }
  DenseMatrix basis = basis_full.left_columns(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += basis(i, a) * basis(i, b);
      if (std::abs(s - (a == b ? 1.0 : 0.0)) > 1e-6) {
        throw InvalidInputError("build_projector: basis columns are not orthonormal");
      }
    }
  }

  ProjectionOperator p{DenseMatrix::identity(d), k, lambda, std::move(basis), side};
  if (p.is_identity()) return p;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += p.basis(i, c) * p.basis(j, c);
      p.matrix(i, j) -= lambda * s;
    }
  }
  return p;
}

DenseMatrix apply_projection(const DenseMatrix& features, const ProjectionOperator& p) {
  if (features.cols() != p.dim()) {
    throw DimensionError("apply_projection: features have " + std::to_string(features.cols()) +
                         " columns, projector is " + std::to_string(p.dim()) + "x" +
                         std::to_string(p.dim()));
  }
  if (p.is_identity()) return features;
  return matmul(features, p.matrix);
}

}  // namespace clear::spectral
