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

#include "clear/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clear/errors.hpp"

namespace clear::graph {

double SparseMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) s += values[e];
  return s;
}

DenseMatrix SparseMatrix::multiply(const DenseMatrix& x) const {
  if (x.rows() != cols) throw DimensionError("SparseMatrix::multiply: shape mismatch");
  DenseMatrix out(rows, x.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    auto o = out.row(r);
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
      const double w = values[e];
      auto src = x.row(col_idx[e]);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix SparseMatrix::multiply_transposed(const DenseMatrix& x) const {
  if (x.rows() != rows) throw DimensionError("SparseMatrix::multiply_transposed: shape mismatch");
  DenseMatrix out(cols, x.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = x.row(r);
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
      const double w = values[e];
      auto o = out.row(col_idx[e]);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) out(r, col_idx[e]) += values[e];
  return out;
}

SparseMatrix SparseMatrix::zeros(std::size_t rows, std::size_t cols) {
  SparseMatrix s;
  s.rows = rows;
  s.cols = cols;
  s.row_ptr.assign(rows + 1, 0);
  return s;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<std::uint32_t> r, std::vector<std::uint32_t> c,
                                         std::vector<double> v) {
  if (r.size() != c.size() || r.size() != v.size()) {
    throw DimensionError("from_triplets: ragged triplet arrays");
  }
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r[a] < r[b] || (r[a] == r[b] && c[a] < c[b]);
  });
  SparseMatrix s = zeros(rows, cols);
  bool has_last = false;
  std::uint32_t last_r = 0;
  std::uint32_t last_c = 0;
  for (std::size_t idx : order) {
    if (r[idx] >= rows || c[idx] >= cols) throw DimensionError("from_triplets: index out of range");
    if (has_last && r[idx] == last_r && c[idx] == last_c) {
      s.values.back() += v[idx];
      continue;
    }
    s.col_idx.push_back(c[idx]);
    s.values.push_back(v[idx]);
    ++s.row_ptr[r[idx] + 1];
    has_last = true;
    last_r = r[idx];
    last_c = c[idx];
  }
  for (std::size_t i = 0; i < rows; ++i) s.row_ptr[i + 1] += s.row_ptr[i];
  return s;
}

SparseMatrix normalized_adjacency(const std::vector<data::Interaction>& edges, std::size_t num_users,
                                  std::size_t num_items, double dropout_rate, std::mt19937_64& rng) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidInputError("normalized_adjacency: dropout rate must lie in [0, 1)");
  }
  std::vector<data::Interaction> kept;
  kept.reserve(edges.size());
  if (dropout_rate == 0.0) {
    kept = edges;
  } else {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (const auto& e : edges) {
      if (uniform(rng) >= dropout_rate) kept.push_back(e);
    }
  }
  std::vector<double> user_deg(num_users, 0.0);
  std::vector<double> item_deg(num_items, 0.0);
  for (const auto& e : kept) {
    if (e.user >= num_users || e.item >= num_items) {
      throw DimensionError("normalized_adjacency: edge index out of range");
    }
    user_deg[e.user] += 1.0;
    item_deg[e.item] += 1.0;
  }
  std::vector<std::uint32_t> r;
  std::vector<std::uint32_t> c;
  std::vector<double> v;
  r.reserve(2 * kept.size());
  c.reserve(2 * kept.size());
  v.reserve(2 * kept.size());
  const auto offset = static_cast<std::uint32_t>(num_users);
  for (const auto& e : kept) {
    const double w = 1.0 / std::sqrt(user_deg[e.user] * item_deg[e.item]);
    r.push_back(e.user);
    c.push_back(offset + e.item);
    v.push_back(w);
    r.push_back(offset + e.item);
    c.push_back(e.user);
    v.push_back(w);
  }
  const std::size_t n = num_users + num_items;
  return SparseMatrix::from_triplets(n, n, std::move(r), std::move(c), std::move(v));
}

std::vector<std::vector<std::uint32_t>> cosine_knn(const DenseMatrix& features, std::size_t k) {
  const std::size_t n = features.rows();
  DenseMatrix unit = features;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = unit.row(i);
    const double norm = std::sqrt(dot(row, row));
    if (norm > 0.0) {
      for (double& x : row) x /= norm;
    }
  }
  const std::size_t depth = std::min(k, n == 0 ? 0 : n - 1);
  std::vector<std::vector<std::uint32_t>> out(n);
  std::vector<double> sim(n);
  std::vector<std::uint32_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sim[j] = dot(unit.row(i), unit.row(j));
      order.push_back(static_cast<std::uint32_t>(j));
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return sim[a] > sim[b] || (sim[a] == sim[b] && a < b);
                      });
    out[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth));
  }
  return out;
}

SparseMatrix item_item_graph(const DenseMatrix& raw_v, const DenseMatrix& raw_t, std::size_t knn,
                             double alpha) {
  if (raw_v.rows() != raw_t.rows()) throw DimensionError("item_item_graph: item counts differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInputError("item_item_graph: alpha outside [0, 1]");
  const std::size_t n = raw_v.rows();
  if (knn == 0) return SparseMatrix::zeros(n, n);
  const auto nv = cosine_knn(raw_v, knn);
  const auto nt = cosine_knn(raw_t, knn);
  std::vector<std::uint32_t> r;
  std::vector<std::uint32_t> c;
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : nv[i]) {
      r.push_back(static_cast<std::uint32_t>(i));
      c.push_back(j);
      v.push_back(alpha);
    }
    for (auto j : nt[i]) {
      r.push_back(static_cast<std::uint32_t>(i));
      c.push_back(j);
      v.push_back(1.0 - alpha);
    }
  }
  SparseMatrix s = SparseMatrix::from_triplets(n, n, std::move(r), std::move(c), std::move(v));
  for (std::size_t i = 0; i < n; ++i) {
    const double total = s.row_sum(i);
    if (total <= 0.0) continue;
    for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) s.values[e] /= total;
  }
  return s;
}

}  // namespace clear::graph
