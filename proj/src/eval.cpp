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

#include "clear/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "clear/errors.hpp"

namespace clear::eval {

data::InteractionDataset split_dataset(const std::vector<data::Interaction>& interactions,
                                       std::size_t num_users, std::size_t num_items,
                                       const SplitRatios& ratios, std::uint64_t seed) {
  if (interactions.empty()) throw InvalidInputError("split_dataset: no interactions");
  const double total = ratios.train + ratios.val + ratios.test;
  if (std::abs(total - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw InvalidInputError("split_dataset: ratios must be nonnegative and sum to 1");
  }
  auto by_user = data::InteractionDataset::group_by_user(interactions, num_users);
  data::InteractionDataset out;
  out.num_users = num_users;
  out.num_items = num_items;
  std::mt19937_64 rng(seed);
  for (std::size_t u = 0; u < num_users; ++u) {
    auto& items = by_user[u];
    items.erase(std::unique(items.begin(), items.end()), items.end());
    if (items.empty()) continue;
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t n = items.size();
    std::size_t n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.val));
    std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.test));
    while (n_val + n_test >= n && n_val > 0) --n_val;
    while (n_val + n_test >= n && n_test > 0) --n_test;
    const std::size_t n_train = n - n_val - n_test;
    const auto user = static_cast<std::uint32_t>(u);
    for (std::size_t r = 0; r < n; ++r) {
      const data::Interaction p{user, items[r]};
      if (r < n_train) {
        out.train.push_back(p);
      } else if (r < n_train + n_val) {
        out.val.push_back(p);
      } else {
        out.test.push_back(p);
      }
    }
  }
  return out;
}

namespace {

void validate_ks(const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw InvalidInputError("rank_and_score: no cutoffs requested");
  for (std::size_t k : ks) {
    if (k == 0) throw InvalidInputError("rank_and_score: K must be >= 1");
  }
}

}  // namespace

EvalReport rank_scores(const DenseMatrix& scores, const data::InteractionDataset& data,
                       const RankOptions& options) {
  validate_ks(options.ks);
  if (scores.rows() != data.num_users || scores.cols() != data.num_items) {
    throw DimensionError("rank_scores: score matrix does not match the dataset");
  }
  std::vector<std::size_t> ks = options.ks;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const std::size_t k_max = ks.back();

  const auto train = data::InteractionDataset::group_by_user(data.train, data.num_users);
  const auto val = data::InteractionDataset::group_by_user(data.val, data.num_users);
  const auto test = data::InteractionDataset::group_by_user(data.test, data.num_users);
  const auto& held_out = options.target == Target::kTest ? test : val;

  // Discount table: 1 / log2(rank + 1) for 1-based rank.
  std::vector<double> discount(k_max + 1, 0.0);
  for (std::size_t r = 1; r <= k_max; ++r) discount[r] = 1.0 / std::log2(static_cast<double>(r) + 1.0);

  EvalReport report;
  std::vector<MetricPair> sums(ks.size());
  std::vector<double> row(data.num_items);
  std::vector<std::uint32_t> order(data.num_items);
  std::vector<char> relevant(data.num_items, 0);
  constexpr double kMasked = -std::numeric_limits<double>::infinity();

  for (std::size_t u = 0; u < data.num_users; ++u) {
    if (held_out[u].empty()) {
      ++report.skipped_users;
      continue;
    }
    auto src = scores.row(u);
    std::copy(src.begin(), src.end(), row.begin());
    for (auto i : train[u]) row[i] = kMasked;
    if (options.target == Target::kTest) {
      for (auto i : val[u]) row[i] = kMasked;
    }
    std::size_t candidates = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] != kMasked) order[candidates++] = static_cast<std::uint32_t>(i);
    }
    const std::size_t depth = std::min(k_max, candidates);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth),
                      order.begin() + static_cast<std::ptrdiff_t>(candidates),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return row[a] > row[b] || (row[a] == row[b] && a < b);
                      });
    for (auto i : held_out[u]) relevant[i] = 1;

    std::vector<MetricPair> values(ks.size());
    std::size_t hits = 0;
    double dcg = 0.0;
    std::size_t next_k = 0;
    for (std::size_t r = 1; r <= k_max; ++r) {
      if (r <= depth && relevant[order[r - 1]] != 0) {
        ++hits;
        dcg += discount[r];
      }
      while (next_k < ks.size() && ks[next_k] == r) {
        double idcg = 0.0;
        const std::size_t ideal = std::min(held_out[u].size(), r);
        for (std::size_t j = 1; j <= ideal; ++j) idcg += discount[j];
        values[next_k] = {static_cast<double>(hits) / static_cast<double>(held_out[u].size()),
                          dcg / idcg};
        ++next_k;
      }
    }
    for (auto i : held_out[u]) relevant[i] = 0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      sums[j].recall += values[j].recall;
      sums[j].ndcg += values[j].ndcg;
    }
    ++report.evaluated_users;
    if (options.keep_per_user) {
      report.user_index.push_back(static_cast<std::uint32_t>(u));
      report.per_user.push_back(std::move(values));
    }
  }
  const double denom = report.evaluated_users == 0 ? 1.0 : static_cast<double>(report.evaluated_users);
  for (std::size_t j = 0; j < ks.size(); ++j) {
    report.metrics[ks[j]] = {sums[j].recall / denom, sums[j].ndcg / denom};
  }
  return report;
}

EvalReport rank_and_score(const DenseMatrix& user_emb, const DenseMatrix& item_emb,
                          const data::InteractionDataset& data, const RankOptions& options) {
  if (user_emb.cols() != item_emb.cols()) throw DimensionError("rank_and_score: embedding widths differ");
  return rank_scores(matmul_nt(user_emb, item_emb), data, options);
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["evaluated_users"] = report.evaluated_users;
  j["skipped_users"] = report.skipped_users;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [k, m] : report.metrics) {
    nlohmann::ordered_json entry;
    entry["recall"] = m.recall;
    entry["ndcg"] = m.ndcg;
    metrics[std::to_string(k)] = entry;
  }
  j["metrics"] = metrics;
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.evaluated_users = j.at("evaluated_users").get<std::size_t>();
  r.skipped_users = j.at("skipped_users").get<std::size_t>();
  for (const auto& [key, entry] : j.at("metrics").items()) {
    r.metrics[std::stoul(key)] = {entry.at("recall").get<double>(), entry.at("ndcg").get<double>()};
  }
  return r;
}

}  // namespace clear::eval
