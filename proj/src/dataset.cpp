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

#include "clear/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <unordered_map>

#include "clear/errors.hpp"

namespace clear::data {

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::uint32_t parse_index(std::string_view field, std::string_view source, std::size_t line_no) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": id '" +
                    std::string(field) + "' is not a dense numeric index");
  }
  return v;
}

}  // namespace

LoadedInteractions parse_interactions(std::istream& in, std::string_view source, IdPolicy policy) {
  LoadedInteractions out;
  std::unordered_map<std::string, std::uint32_t> users;
  std::unordered_map<std::string, std::uint32_t> items;
  std::set<Interaction> seen;
  std::uint32_t max_user = 0;
  std::uint32_t max_item = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == view.size() ||
        view.find('\t', tab + 1) != std::string_view::npos) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) +
                      ": expected 'user_id<TAB>item_id'");
    }
    const std::string_view user = view.substr(0, tab);
    const std::string_view item = view.substr(tab + 1);
    ++out.lines_read;

    Interaction pair;
    if (policy == IdPolicy::kNumericIndex) {
      pair = {parse_index(user, source, line_no), parse_index(item, source, line_no)};
      max_user = std::max(max_user, pair.user);
      max_item = std::max(max_item, pair.item);
    } else {
      auto [u, u_new] = users.try_emplace(std::string(user), static_cast<std::uint32_t>(users.size()));
      if (u_new) out.user_ids.emplace_back(user);
      auto [i, i_new] = items.try_emplace(std::string(item), static_cast<std::uint32_t>(items.size()));
      if (i_new) out.item_ids.emplace_back(item);
      pair = {u->second, i->second};
    }
    if (!seen.insert(pair).second) {
      ++out.duplicates_removed;
      continue;
    }
    out.pairs.push_back(pair);
  }
  if (out.pairs.empty()) throw DataError(std::string(source) + ": no interactions");
  if (policy == IdPolicy::kNumericIndex) {
    for (std::uint32_t u = 0; u <= max_user; ++u) out.user_ids.push_back(std::to_string(u));
    for (std::uint32_t i = 0; i <= max_item; ++i) out.item_ids.push_back(std::to_string(i));
  }
  return out;
}

LoadedInteractions load_interactions(const std::filesystem::path& path, IdPolicy policy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interactions file " + path.string());
  return parse_interactions(in, path.string(), policy);
}

void save_interactions(const std::filesystem::path& path, const std::vector<Interaction>& pairs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : pairs) out << p.user << '\t' << p.item << '\n';
  if (!out) throw DataError("short write to " + path.string());
}

std::vector<std::vector<std::uint32_t>> InteractionDataset::group_by_user(
    const std::vector<Interaction>& split, std::size_t num_users) {
  std::vector<std::vector<std::uint32_t>> out(num_users);
  for (const auto& p : split) out.at(p.user).push_back(p.item);
  for (auto& items : out) std::sort(items.begin(), items.end());
  return out;
}

void InteractionDataset::validate() const {
  auto check = [&](const std::vector<Interaction>& split, const char* name) {
    std::set<Interaction> unique;
    for (const auto& p : split) {
      if (p.user >= num_users || p.item >= num_items) {
        throw DataError(std::string(name) + " split has an out-of-range index");
      }
      if (!unique.insert(p).second) throw DataError(std::string(name) + " split has duplicates");
    }
    return unique;
  };
  const auto train_set = check(train, "train");
  check(val, "val");
  for (const auto& p : check(test, "test")) {
    if (train_set.count(p) != 0) throw DataError("train and test splits overlap");
  }
}

CoreFilterResult k_core_filter(const std::vector<Interaction>& pairs, std::size_t k) {
  std::vector<Interaction> current = pairs;
  for (;;) {
    std::unordered_map<std::uint32_t, std::size_t> user_deg;
    std::unordered_map<std::uint32_t, std::size_t> item_deg;
    for (const auto& p : current) {
      ++user_deg[p.user];
      ++item_deg[p.item];
    }
    std::vector<Interaction> next;
    next.reserve(current.size());
    for (const auto& p : current) {
      if (user_deg[p.user] >= k && item_deg[p.item] >= k) next.push_back(p);
    }
    if (next.size() == current.size()) break;
    current = std::move(next);
  }

  CoreFilterResult out;
  std::unordered_map<std::uint32_t, std::uint32_t> user_map;
  std::unordered_map<std::uint32_t, std::uint32_t> item_map;
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> items;
  for (const auto& p : current) {
    users.push_back(p.user);
    items.push_back(p.item);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  for (std::uint32_t i = 0; i < users.size(); ++i) user_map[users[i]] = i;
  for (std::uint32_t i = 0; i < items.size(); ++i) item_map[items[i]] = i;
  out.pairs.reserve(current.size());
  for (const auto& p : current) out.pairs.push_back({user_map[p.user], item_map[p.item]});
  out.kept_users = std::move(users);
  out.kept_items = std::move(items);
  return out;
}

std::optional<DatasetStats> documented_stats(std::string_view dataset_name) {
  std::string name(dataset_name);
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  if (name == "baby") return DatasetStats{19445, 7050, 160792};
  if (name == "sports") return DatasetStats{35598, 18357, 296337};
  if (name == "clothing") return DatasetStats{39387, 23033, 278677};
  return std::nullopt;
}

void verify_documented_stats(std::string_view dataset_name, const DatasetStats& actual) {
  const auto expected = documented_stats(dataset_name);
  if (!expected) return;
  if (actual.users != expected->users || actual.items != expected->items ||
      actual.interactions != expected->interactions) {
    throw DataError(std::string(dataset_name) + ": expected " + std::to_string(expected->users) +
                    " users / " + std::to_string(expected->items) + " items / " +
                    std::to_string(expected->interactions) + " interactions, loaded " +
                    std::to_string(actual.users) + " / " + std::to_string(actual.items) + " / " +
                    std::to_string(actual.interactions));
  }
}

void verify_documented_stats(std::string_view dataset_name, const LoadedInteractions& loaded) {
  verify_documented_stats(dataset_name, DatasetStats{loaded.num_users(), loaded.num_items(), loaded.pairs.size()});
}

}  // namespace clear::data
