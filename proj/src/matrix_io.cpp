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

#include "clear/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "clear/errors.hpp"

namespace clear::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::string_view b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::string at_offset(std::size_t offset) { return " at byte offset " + std::to_string(offset); }

}  // namespace

std::string encode_matrix(const DenseMatrix& m, Dtype dtype) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("encode_matrix: dimensions exceed u32");
  }
  const std::size_t width = dtype == Dtype::kF32 ? 4 : 8;
  std::string out;
  out.reserve(kMatrixHeaderBytes + m.size() * width);
  out.append(kMatrixMagic);
  put_u32(out, kMatrixVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.push_back(static_cast<char>(dtype));
  for (double x : m.values()) {
    if (dtype == Dtype::kF32) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    } else {
      put_u64(out, std::bit_cast<std::uint64_t>(x));
    }
  }
  return out;
}

DenseMatrix decode_matrix(std::string_view bytes, Dtype* dtype_out, std::size_t base_offset) {
  if (bytes.size() < kMatrixHeaderBytes) {
    throw FormatError("CLRF header truncated: expected " + std::to_string(kMatrixHeaderBytes) +
                      " bytes, got " + std::to_string(bytes.size()) + at_offset(base_offset));
  }
  if (bytes.substr(0, 4) != kMatrixMagic) throw FormatError("bad CLRF magic" + at_offset(base_offset));
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kMatrixVersion) {
    throw FormatError("unsupported CLRF version " + std::to_string(version) +
                      at_offset(base_offset + 4));
  }
  const std::size_t rows = get_u32(bytes, 8);
  const std::size_t cols = get_u32(bytes, 12);
  const auto raw_dtype = static_cast<unsigned char>(bytes[16]);
  if (raw_dtype > 1) {
    throw FormatError("unknown CLRF dtype " + std::to_string(raw_dtype) + at_offset(base_offset + 16));
  }
  const auto dtype = static_cast<Dtype>(raw_dtype);
  const std::size_t width = dtype == Dtype::kF32 ? 4 : 8;
  const std::size_t expected = rows * cols * width;
  const std::size_t actual = bytes.size() - kMatrixHeaderBytes;
  if (actual != expected) {
    throw FormatError("CLRF payload " + std::string(actual < expected ? "truncated" : "oversized") +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(actual) + at_offset(base_offset + kMatrixHeaderBytes));
  }
  std::vector<double> data(rows * cols);
  std::size_t at = kMatrixHeaderBytes;
  for (double& x : data) {
    if (dtype == Dtype::kF32) {
      x = static_cast<double>(std::bit_cast<float>(get_u32(bytes, at)));
    } else {
      x = std::bit_cast<double>(get_u64(bytes, at));
    }
    at += width;
  }
  if (dtype_out != nullptr) *dtype_out = dtype;
  return DenseMatrix(rows, cols, std::move(data));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m, Dtype dtype) {
  write_file(path, encode_matrix(m, dtype));
}

DenseMatrix load_matrix(const std::filesystem::path& path, Dtype* dtype_out) {
  return decode_matrix(read_file(path), dtype_out);
}

}  // namespace clear::io
