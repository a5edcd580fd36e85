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
#include <random>
#include <vector>

#include "clear/dataset.hpp"
#include "clear/dense_matrix.hpp"

namespace clear::graph {

/// Compressed sparse row matrix.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double row_sum(std::size_t r) const;

  /// S · X
  DenseMatrix multiply(const DenseMatrix& x) const;
  /// Sᵀ · X
  DenseMatrix multiply_transposed(const DenseMatrix& x) const;
  DenseMatrix to_dense() const;

  /// An n×n matrix with no stored entries.
  static SparseMatrix zeros(std::size_t rows, std::size_t cols);
  /// Builds from (row, col, value) triplets; duplicates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<std::uint32_t> r, std::vector<std::uint32_t> c,
                                    std::vector<double> v);
};

/// Symmetric-normalized user-item adjacency over M + N nodes (users first).
///
/// Each training edge survives with probability 1 − dropout_rate; surviving
/// edges get weight 1/√(deg_u·deg_i) with degrees counted after dropout.
/// A zero rate consumes no random numbers.
SparseMatrix normalized_adjacency(const std::vector<data::Interaction>& edges, std::size_t num_users,
                                  std::size_t num_items, double dropout_rate, std::mt19937_64& rng);

/// Cosine kNN lists (self excluded, ties to lower index) for each row of `features`.
std::vector<std::vector<std::uint32_t>> cosine_knn(const DenseMatrix& features, std::size_t k);

/// Frozen item-item graph: per-modality binary kNN graphs combined as
/// α·K_v + (1 − α)·K_t, then row-normalized.
SparseMatrix item_item_graph(const DenseMatrix& raw_v, const DenseMatrix& raw_t, std::size_t knn,
                             double alpha);

}  // namespace clear::graph
