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
#include <limits>
#include <random>

#include "clear/errors.hpp"
#include "clear/spectral.hpp"
#include "../support/test_support.hpp"

using namespace clear;
using clear::spectral::Side;

namespace {

double orthonormality_error(const DenseMatrix& q) {
  return max_abs_diff(matmul_tn(q, q), DenseMatrix::identity(q.cols()));
}

DenseMatrix reconstruct(const spectral::SvdResult& s) {
  DenseMatrix scaled = s.left_vectors;
  for (std::size_t r = 0; r < scaled.rows(); ++r) {
    for (std::size_t c = 0; c < scaled.cols(); ++c) scaled(r, c) *= s.singular_values[c];
  }
  return matmul_nt(scaled, s.right_vectors);
}

}  // namespace

TEST_CASE("mean_center removes column means") {
  const DenseMatrix m{{1.0, 10.0}, {3.0, 20.0}, {5.0, 60.0}};
  const auto c = spectral::mean_center(m);
  CHECK(c.mean[0] == doctest::Approx(3.0));
  CHECK(c.mean[1] == doctest::Approx(30.0));
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += c.centered(i, j);
    CHECK(std::abs(s) < 1e-12);
  }
  CHECK_THROWS_AS(spectral::mean_center(DenseMatrix{}), InvalidInputError);
}

TEST_CASE("cross_covariance matches an explicit double loop") {
  std::mt19937_64 rng(3);
  const auto v = testing::gaussian(9, 4, rng);
  const auto t = testing::gaussian(9, 3, rng);
  const auto c = spectral::cross_covariance(v, t);
  REQUIRE(c.rows() == 4);
  REQUIRE(c.cols() == 3);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < 9; ++n) s += v(n, i) * t(n, j);
      CHECK(c(i, j) == doctest::Approx(s / 9.0).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(spectral::cross_covariance(v, testing::gaussian(8, 3, rng)), DimensionError);
}

TEST_CASE("svd reconstructs and agrees with the Eigen reference") {
  std::mt19937_64 rng(11);
  for (std::size_t d : {1u, 2u, 5u, 16u, 33u}) {
    const auto a = testing::gaussian(d, d, rng);
    const auto s = spectral::svd(a);
    CHECK(orthonormality_error(s.left_vectors) < 1e-12);
    CHECK(orthonormality_error(s.right_vectors) < 1e-12);
    CHECK(max_abs_diff(reconstruct(s), a) < 1e-11);
    const auto ref = testing::reference_singular_values(a);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(s.singular_values[i] == doctest::Approx(ref[i]).epsilon(1e-10));
      if (i > 0) CHECK(s.singular_values[i] <= s.singular_values[i - 1]);
    }
  }
}

TEST_CASE("svd sign convention and determinism") {
  std::mt19937_64 rng(5);
  const auto a = testing::gaussian(7, 7, rng);
  const auto s1 = spectral::svd(a);
  const auto s2 = spectral::svd(a);
  CHECK(bitwise_equal(s1.left_vectors, s2.left_vectors));
  CHECK(bitwise_equal(s1.right_vectors, s2.right_vectors));
  CHECK(s1.singular_values == s2.singular_values);
  for (std::size_t c = 0; c < 7; ++c) {
    for (std::size_t r = 0; r < 7; ++r) {
      if (std::abs(s1.left_vectors(r, c)) > 1e-12) {
        CHECK(s1.left_vectors(r, c) > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("svd of rank-deficient and zero matrices still yields orthonormal factors") {
  std::mt19937_64 rng(8);
  const auto x = testing::gaussian(6, 2, rng);
  const auto low_rank = matmul_nt(x, testing::gaussian(6, 2, rng));
  const auto s = spectral::svd(low_rank);
  CHECK(orthonormality_error(s.left_vectors) < 1e-10);
  CHECK(orthonormality_error(s.right_vectors) < 1e-10);
  CHECK(max_abs_diff(reconstruct(s), low_rank) < 1e-11);
  for (std::size_t i = 2; i < 6; ++i) CHECK(s.singular_values[i] < 1e-12);

  const auto z = spectral::svd(DenseMatrix(4, 4));
  CHECK(orthonormality_error(z.left_vectors) < 1e-12);
  for (double sv : z.singular_values) CHECK(sv == 0.0);
}

TEST_CASE("svd input validation") {
  CHECK_THROWS_AS(spectral::svd(DenseMatrix(3, 2)), DimensionError);
  DenseMatrix bad(2, 2);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(spectral::svd(bad), InvalidInputError);
}

TEST_CASE("build_projector rejects invalid rank, strength and basis") {
  const auto eye = DenseMatrix::identity(4);
  CHECK_THROWS_AS(spectral::build_projector(eye, 5, 0.5, Side::kVisual), InvalidRankError);
  CHECK_THROWS_AS(spectral::build_projector(eye, 2, 1.5, Side::kVisual), InvalidStrengthError);
  CHECK_THROWS_AS(spectral::build_projector(eye, 2, -0.1, Side::kVisual), InvalidStrengthError);
  CHECK_THROWS_AS(spectral::build_projector(eye, 2, std::nan(""), Side::kVisual), InvalidStrengthError);
  CHECK_THROWS_AS(spectral::build_projector(2.0 * eye, 2, 0.5, Side::kVisual), InvalidInputError);
}

TEST_CASE("projector algebra") {
  std::mt19937_64 rng(21);
  const auto basis = testing::from_eigen(testing::random_orthogonal(6, rng));

  SUBCASE("full strength is a symmetric idempotent null-space projector") {
    const auto p = spectral::build_projector(basis, 3, 1.0, Side::kTextual);
    CHECK(p.matrix == p.matrix.transpose());
    CHECK(max_abs_diff(matmul(p.matrix, p.matrix), p.matrix) <= 1e-12);
    CHECK(matmul(p.matrix, basis.left_columns(3)).max_abs() < 1e-12);
    CHECK(p.side == Side::kTextual);
  }
  SUBCASE("soft strength scales the subspace by 1 - lambda and keeps the complement") {
    const double lambda = 0.7;
    const auto p = spectral::build_projector(basis, 2, lambda, Side::kVisual);
    for (std::size_t c = 0; c < 6; ++c) {
      const DenseMatrix b(6, 1, basis.column(c));
      const auto pb = matmul(p.matrix, b);
      const double factor = c < 2 ? 1.0 - lambda : 1.0;
      CHECK(max_abs_diff(pb, factor * b) < 1e-12);
    }
  }
  SUBCASE("identity operators are exact and copy features bit for bit") {
    for (const auto& p : {spectral::build_projector(basis, 3, 0.0, Side::kVisual),
                          spectral::build_projector(basis, 0, 0.9, Side::kVisual)}) {
      CHECK(p.is_identity());
      CHECK(p.matrix == DenseMatrix::identity(6));
      auto features = testing::gaussian(5, 6, rng);
      features(0, 0) = -0.0;
      features(1, 2) = std::numeric_limits<double>::denorm_min();
      CHECK(bitwise_equal(spectral::apply_projection(features, p), features));
    }
  }
}

TEST_CASE("projected cross-covariance follows the suppression law") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto sigma = testing::gapped_spectrum(8, {2, 4}, rng);
    const auto planted = testing::planted_pair(120, sigma, rng);
    const auto c = spectral::cross_covariance(planted.v, planted.t);
    const auto s = spectral::svd(c);
    for (std::size_t i = 0; i < 8; ++i) CHECK(s.singular_values[i] == doctest::Approx(sigma[i]).epsilon(1e-9));
    for (std::size_t k : {2u, 4u}) {
      for (double lambda : {0.3, 0.9}) {
        const auto pv = spectral::build_projector(s.left_vectors, k, lambda, Side::kVisual);
        const auto pt = spectral::build_projector(s.right_vectors, k, lambda, Side::kTextual);
        const auto projected = spectral::cross_covariance(spectral::apply_projection(planted.v, pv),
                                                          spectral::apply_projection(planted.t, pt));
        const Eigen::MatrixXd along = planted.u.transpose() * testing::to_eigen(projected) * planted.w;
        for (std::size_t i = 0; i < 8; ++i) {
          const double expected = (i < k ? (1 - lambda) * (1 - lambda) : 1.0) * sigma[i];
          CHECK(along(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) ==
                doctest::Approx(expected).epsilon(1e-9));
        }
      }
    }
  }
}
