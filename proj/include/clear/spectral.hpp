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
#include <string_view>
#include <vector>

#include "clear/dense_matrix.hpp"

namespace clear::spectral {

struct CenteredMatrix {
  DenseMatrix centered;
  std::vector<double> mean;
};

/// Thin SVD of a square matrix: `c = left * diag(singular_values) * rightᵀ`.
struct SvdResult {
  DenseMatrix left_vectors;  // columns are uᵢ
  std::vector<double> singular_values;  // nonincreasing
  DenseMatrix right_vectors;  // columns are wᵢ
};

enum class Side { kVisual, kTextual };

std::string_view to_string(Side side);

/// Soft null-space projector `I − λ·B·Bᵀ` together with what it was built from.
struct ProjectionOperator {
  DenseMatrix matrix;
  std::size_t rank_k = 0;
  double strength_lambda = 0.0;
  DenseMatrix basis;  // d×k
  Side side = Side::kVisual;

  std::size_t dim() const { return matrix.rows(); }
  /// λ = 0 or k = 0: the operator is the exact identity.
  bool is_identity() const { return rank_k == 0 || strength_lambda == 0.0; }
};

/// Subtracts column means. Throws InvalidInputError on an empty matrix.
CenteredMatrix mean_center(const DenseMatrix& m);

/// (1/N)·vᵀ·t for two centered N-row matrices.
DenseMatrix cross_covariance(const DenseMatrix& v_centered, const DenseMatrix& t_centered);

/// One-sided cyclic Jacobi SVD of a square matrix.
///
/// Sweeps visit column pairs (p, q), p < q, in lexicographic order, so the
/// result is a deterministic function of the input. Singular triplets are
/// sorted by descending singular value (ties keep their column order) and
/// each left vector is sign-flipped, together with its right partner, so its
/// first non-negligible entry is nonnegative. Columns belonging to a zero
/// singular value are completed to an orthonormal basis.
SvdResult svd(const DenseMatrix& c);

/// Builds `I − λ·B_k·B_kᵀ` from the first k columns of `basis_full`.
ProjectionOperator build_projector(const DenseMatrix& basis_full, std::size_t k, double lambda,
                                   Side side);

/// features · P. An identity operator returns a copy of `features`.
DenseMatrix apply_projection(const DenseMatrix& features, const ProjectionOperator& p);

}  // namespace clear::spectral
