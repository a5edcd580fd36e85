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

#include "clear/checkpoint.hpp"

#include <string>
#include <vector>

#include "clear/errors.hpp"
#include "clear/matrix_io.hpp"

namespace clear::checkpoint {

namespace {

constexpr std::size_t kPreambleBytes = 16;

DenseMatrix as_row(const std::vector<double>& v) { return DenseMatrix(1, v.size(), v); }

std::vector<double> from_row(const DenseMatrix& m) { return m.storage(); }

spectral::Side side_from(const std::string& s) {
  if (s == "visual") return spectral::Side::kVisual;
  if (s == "textual") return spectral::Side::kTextual;
  throw FormatError("checkpoint: unknown projector side '" + s + "'");
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, const DenseMatrix*>> blobs;
  const auto tensors = ckpt.state.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    blobs.emplace_back("state/" + std::string(model::ModelState::kTensorNames[i]), tensors[i]);
  }
  const DenseMatrix spectrum = as_row(ckpt.projectors.spectrum);
  const DenseMatrix mean_v = as_row(ckpt.projectors.mean_visual);
  const DenseMatrix mean_t = as_row(ckpt.projectors.mean_textual);
  blobs.emplace_back("projectors/visual/matrix", &ckpt.projectors.visual.matrix);
  blobs.emplace_back("projectors/visual/basis", &ckpt.projectors.visual.basis);
  blobs.emplace_back("projectors/textual/matrix", &ckpt.projectors.textual.matrix);
  blobs.emplace_back("projectors/textual/basis", &ckpt.projectors.textual.basis);
  blobs.emplace_back("projectors/spectrum", &spectrum);
  blobs.emplace_back("projectors/mean_visual", &mean_v);
  blobs.emplace_back("projectors/mean_textual", &mean_t);

  nlohmann::json manifest;
  manifest["format"] = "clear-checkpoint";
  manifest["version"] = kContainerVersion;
  manifest["metadata"] = ckpt.metadata;
  auto projector_meta = [](const spectral::ProjectionOperator& p) {
    return nlohmann::json{{"rank_k", p.rank_k},
                          {"strength_lambda", p.strength_lambda},
                          {"side", std::string(spectral::to_string(p.side))}};
  };
  manifest["projectors"] = {{"epoch_built", ckpt.projectors.epoch_built},
                            {"visual", projector_meta(ckpt.projectors.visual)},
                            {"textual", projector_meta(ckpt.projectors.textual)}};
  std::string payload;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& [name, m] : blobs) {
    const std::string blob = io::encode_matrix(*m, io::Dtype::kF64);
    index.push_back({{"name", name}, {"offset", payload.size()}, {"bytes", blob.size()}});
    payload += blob;
  }
  manifest["tensors"] = index;
  const std::string manifest_text = manifest.dump();

  std::string out;
  out.append(kContainerMagic);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((kContainerVersion >> (8 * i)) & 0xFFu));
  const auto len = static_cast<std::uint64_t>(manifest_text.size());
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xFFu));
  out += manifest_text;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kPreambleBytes) throw FormatError("checkpoint truncated at byte offset 0");
  if (bytes.substr(0, 4) != kContainerMagic) throw FormatError("bad checkpoint magic at byte offset 0");
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 + i])) << (8 * i);
  if (version != kContainerVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " at byte offset 4");
  }
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (bytes.size() - kPreambleBytes < len) {
    throw FormatError("checkpoint manifest truncated: expected " + std::to_string(len) + " bytes, got " +
                      std::to_string(bytes.size() - kPreambleBytes) + " at byte offset 16");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(kPreambleBytes, len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  const std::size_t payload_start = kPreambleBytes + len;
  const std::string_view payload = bytes.substr(payload_start);

  auto blob = [&](const std::string& name) {
    for (const auto& entry : manifest.at("tensors")) {
      if (entry.at("name") != name) continue;
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto size = entry.at("bytes").get<std::size_t>();
      if (offset > payload.size() || payload.size() - offset < size) {
        throw FormatError("checkpoint tensor '" + name + "' truncated at byte offset " +
                          std::to_string(payload_start + offset));
      }
      return io::decode_matrix(payload.substr(offset, size), nullptr, payload_start + offset);
    }
    throw FormatError("checkpoint has no tensor '" + name + "'");
  };

  Checkpoint ckpt;
  try {
    ckpt.metadata = manifest.at("metadata");
    auto tensors = ckpt.state.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      *tensors[i] = blob("state/" + std::string(model::ModelState::kTensorNames[i]));
    }
    ckpt.state.validate();
    const auto& pm = manifest.at("projectors");
    auto load_projector = [&](const char* side) {
      spectral::ProjectionOperator p;
      p.matrix = blob(std::string("projectors/") + side + "/matrix");
      p.basis = blob(std::string("projectors/") + side + "/basis");
      p.rank_k = pm.at(side).at("rank_k").get<std::size_t>();
      p.strength_lambda = pm.at(side).at("strength_lambda").get<double>();
      p.side = side_from(pm.at(side).at("side").get<std::string>());
      return p;
    };
    ckpt.projectors.visual = load_projector("visual");
    ckpt.projectors.textual = load_projector("textual");
    ckpt.projectors.epoch_built = pm.at("epoch_built").get<std::size_t>();
    ckpt.projectors.spectrum = from_row(blob("projectors/spectrum"));
    ckpt.projectors.mean_visual = from_row(blob("projectors/mean_visual"));
    ckpt.projectors.mean_textual = from_row(blob("projectors/mean_textual"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is malformed: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint tensors are inconsistent: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace clear::checkpoint
