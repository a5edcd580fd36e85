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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clear::data {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  auto operator<=>(const Interaction&) const = default;
};

/// How external ids in a TSV file map to dense indices.
enum class IdPolicy {
  kFirstSeen,     // dense ids in order of first appearance
  kNumericIndex,  // ids are already dense row indices (feature-aligned items)
};

struct LoadedInteractions {
  std::vector<Interaction> pairs;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::size_t lines_read = 0;
  std::size_t duplicates_removed = 0;

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }
};

/// `user_id<TAB>item_id` per line. Duplicate pairs are dropped and counted.
/// Throws DataError naming the line for malformed input, or for an empty file.
LoadedInteractions parse_interactions(std::istream& in, std::string_view source,
                                      IdPolicy policy = IdPolicy::kFirstSeen);
LoadedInteractions load_interactions(const std::filesystem::path& path,
                                     IdPolicy policy = IdPolicy::kFirstSeen);
void save_interactions(const std::filesystem::path& path, const std::vector<Interaction>& pairs);

struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> val;
  std::vector<Interaction> test;

  /// Per-user sorted item lists for one split.
  static std::vector<std::vector<std::uint32_t>> group_by_user(const std::vector<Interaction>& split,
                                                              std::size_t num_users);
  /// Checks index ranges, intra-split duplicates and train/test disjointness.
  void validate() const;
};

struct CoreFilterResult {
  std::vector<Interaction> pairs;  // re-indexed densely
  std::vector<std::uint32_t> kept_users;  // new index -> old index
  std::vector<std::uint32_t> kept_items;
};

/// Iteratively drops users and items with fewer than `k` interactions.
CoreFilterResult k_core_filter(const std::vector<Interaction>& pairs, std::size_t k = 5);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
};

/// Published statistics of the Amazon Baby / Sports / Clothing sets (5-core).
std::optional<DatasetStats> documented_stats(std::string_view dataset_name);

/// Throws DataError when `loaded` disagrees with the documented statistics of
/// `dataset_name`. Unknown names pass.
void verify_documented_stats(std::string_view dataset_name, const DatasetStats& actual);
void verify_documented_stats(std::string_view dataset_name, const LoadedInteractions& loaded);

}  // namespace clear::data
