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

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "clear/model.hpp"
#include "clear/redundancy.hpp"

namespace clear::checkpoint {

/// Container layout (little-endian): "CLRC", u32 version = 1, u64 manifest
/// length, UTF-8 JSON manifest, then CLRF blobs back to back. The manifest
/// lists every blob by name with its offset (from the end of the manifest)
/// and byte length, and carries the caller's metadata verbatim.
inline constexpr std::string_view kContainerMagic = "CLRC";
inline constexpr std::uint32_t kContainerVersion = 1;

struct Checkpoint {
  model::ModelState state;
  redundancy::ProjectionPair projectors;
  nlohmann::json metadata;  // resolved config, eval report, input hashes, ...
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace clear::checkpoint
