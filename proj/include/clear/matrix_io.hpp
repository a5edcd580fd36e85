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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "clear/dense_matrix.hpp"

namespace clear::io {

/// Element type of a CLRF payload.
enum class Dtype : std::uint8_t { kF32 = 0, kF64 = 1 };

/// CLRF layout (little-endian): "CLRF", u32 version = 1, u32 rows, u32 cols,
/// u8 dtype, then the row-major payload.
inline constexpr std::string_view kMatrixMagic = "CLRF";
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 17;

std::string encode_matrix(const DenseMatrix& m, Dtype dtype = Dtype::kF64);

/// Decodes one CLRF blob. `base_offset` is added to byte offsets quoted in
/// errors, for blobs embedded in a larger file. f32 payloads are widened.
DenseMatrix decode_matrix(std::string_view bytes, Dtype* dtype_out = nullptr,
                          std::size_t base_offset = 0);

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m,
                 Dtype dtype = Dtype::kF64);
DenseMatrix load_matrix(const std::filesystem::path& path, Dtype* dtype_out = nullptr);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace clear::io
