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

#include <algorithm>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "clear/checkpoint.hpp"
#include "clear/dataset.hpp"
#include "clear/errors.hpp"
#include "clear/hash.hpp"
#include "clear/matrix_io.hpp"
#include "clear/spectral.hpp"
#include "clear/synthetic.hpp"
#include "../support/test_support.hpp"

using namespace clear;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

double cross_cov_norm(const DenseMatrix& v, const DenseMatrix& t) {
  return spectral::cross_covariance(spectral::mean_center(v).centered, spectral::mean_center(t).centered)
      .frobenius_norm();
}

}  // namespace

TEST_CASE("CLRF round trip is bit exact") {
  std::mt19937_64 rng(1);
  auto m = testing::gaussian(7, 3, rng);
  m(0, 0) = -0.0;
  m(1, 1) = std::numeric_limits<double>::denorm_min();
  m(2, 2) = std::numeric_limits<double>::infinity();
  const auto bytes = io::encode_matrix(m);
  CHECK(bytes.size() == io::kMatrixHeaderBytes + 7 * 3 * 8);
  CHECK(bytes.substr(0, 4) == "CLRF");
  io::Dtype dtype{};
  const auto back = io::decode_matrix(bytes, &dtype);
  CHECK(dtype == io::Dtype::kF64);
  CHECK(bitwise_equal(back, m));

  const auto dir = testing::scratch_dir("clrf");
  io::save_matrix(dir / "m.clrf", m);
  CHECK(bitwise_equal(io::load_matrix(dir / "m.clrf"), m));

  // Little-endian header fields.
  const unsigned char* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  CHECK(raw[4] == 1);
  CHECK(raw[8] == 7);
  CHECK(raw[12] == 3);
  CHECK(raw[16] == 1);
}

TEST_CASE("f32 payloads are widened on load") {
  std::mt19937_64 rng(2);
  const auto m = testing::gaussian(4, 5, rng);
  const auto dir = testing::scratch_dir("clrf32");
  io::save_matrix(dir / "m32.clrf", m, io::Dtype::kF32);
  io::Dtype dtype{};
  const auto widened = io::load_matrix(dir / "m32.clrf", &dtype);
  CHECK(dtype == io::Dtype::kF32);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(widened.values()[i] == static_cast<double>(static_cast<float>(m.values()[i])));
  }
  io::save_matrix(dir / "m64.clrf", widened);
  CHECK(bitwise_equal(io::load_matrix(dir / "m64.clrf"), widened));
}

TEST_CASE("CLRF decoding errors name offsets and byte counts") {
  const auto good = io::encode_matrix(DenseMatrix(2, 3, 1.5));
  const auto truncated = error_of([&] { io::decode_matrix(good.substr(0, good.size() - 5)); });
  CHECK(truncated.find("expected 48 bytes, got 43") != std::string::npos);
  CHECK(truncated.find("offset 17") != std::string::npos);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(error_of([&] { io::decode_matrix(bad_magic); }).find("magic") != std::string::npos);

  std::string bad_version = good;
  bad_version[4] = 2;
  CHECK(error_of([&] { io::decode_matrix(bad_version); }).find("offset 4") != std::string::npos);

  std::string bad_dtype = good;
  bad_dtype[16] = 7;
  CHECK_THROWS_AS(io::decode_matrix(bad_dtype), FormatError);
  CHECK_THROWS_AS(io::decode_matrix(good.substr(0, 10)), FormatError);
  CHECK_THROWS_AS(io::decode_matrix(good + "x"), FormatError);
  CHECK_THROWS_AS(io::load_matrix("/nonexistent/file.clrf"), DataError);
}

TEST_CASE("interaction parsing") {
  SUBCASE("first-seen ids") {
    std::istringstream in("alice\tbook\nbob\tbook\nalice\tlamp\n");
    const auto r = data::parse_interactions(in, "mem");
    CHECK(r.pairs.size() == 3);
    CHECK(r.num_users() == 2);
    CHECK(r.num_items() == 2);
    CHECK(r.pairs[2] == data::Interaction{0, 1});
    CHECK(r.user_ids[1] == "bob");
  }
  SUBCASE("duplicates are dropped and counted") {
    std::istringstream in("1\t2\n1\t2\r\n3\t4\n\n");
    const auto r = data::parse_interactions(in, "mem", data::IdPolicy::kNumericIndex);
    CHECK(r.pairs.size() == 2);
    CHECK(r.duplicates_removed == 1);
    CHECK(r.lines_read == 3);
    CHECK(r.num_users() == 4);
    CHECK(r.num_items() == 5);
  }
  SUBCASE("malformed lines name the file and line") {
    std::istringstream in("1\t2\n1 2\n");
    const auto msg = error_of([&] { data::parse_interactions(in, "f.tsv"); });
    CHECK(msg.find("f.tsv:2") != std::string::npos);
    std::istringstream three("1\t2\t3\n");
    CHECK_THROWS_AS(data::parse_interactions(three, "f.tsv"), DataError);
    std::istringstream word("1\tx\n");
    CHECK(error_of([&] { data::parse_interactions(word, "g.tsv", data::IdPolicy::kNumericIndex); })
              .find("g.tsv:1") != std::string::npos);
  }
  SUBCASE("empty input is an error") {
    std::istringstream in("\n\n");
    CHECK_THROWS_AS(data::parse_interactions(in, "empty"), DataError);
    CHECK_THROWS_AS(data::load_interactions("/nonexistent.tsv"), DataError);
  }
  SUBCASE("save and load") {
    const auto dir = testing::scratch_dir("tsv");
    const std::vector<data::Interaction> pairs{{0, 3}, {2, 1}};
    data::save_interactions(dir / "i.tsv", pairs);
    CHECK(data::load_interactions(dir / "i.tsv", data::IdPolicy::kNumericIndex).pairs == pairs);
  }
}

TEST_CASE("k-core filtering iterates to a fixed point") {
  // Users 0-2 each see items 0-2 (a 3-core); user 3 sees item 0 and item 3,
  // and item 3 is only seen once, so user 3 drops, then nothing else.
  std::vector<data::Interaction> pairs;
  for (std::uint32_t u = 0; u < 3; ++u)
    for (std::uint32_t i = 0; i < 3; ++i) pairs.push_back({u, i});
  pairs.push_back({3, 0});
  pairs.push_back({3, 3});
  const auto r = data::k_core_filter(pairs, 3);
  CHECK(r.pairs.size() == 9);
  CHECK(r.kept_users == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(r.kept_items == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(data::k_core_filter(pairs, 4).pairs.empty());
  CHECK(data::k_core_filter(pairs, 1).pairs.size() == pairs.size());
}

TEST_CASE("documented dataset statistics") {
  const auto baby = data::documented_stats("baby");
  REQUIRE(baby);
  CHECK(baby->users == 19445);
  CHECK(baby->items == 7050);
  CHECK(baby->interactions == 160792);
  CHECK(data::documented_stats("Sports")->interactions == 296337);
  CHECK(data::documented_stats("clothing")->items == 23033);
  CHECK_FALSE(data::documented_stats("synthetic"));
  CHECK_THROWS_AS(data::verify_documented_stats("baby", data::DatasetStats{19445, 7050, 160791}), DataError);
  CHECK_NOTHROW(data::verify_documented_stats("baby", data::DatasetStats{19445, 7050, 160792}));
  CHECK_NOTHROW(data::verify_documented_stats("synthetic", data::DatasetStats{1, 1, 1}));
}

TEST_CASE("synthetic generator is deterministic and shaped as requested") {
  data::SyntheticSpec spec;
  spec.num_users = 30;
  spec.num_items = 50;
  spec.interactions_per_user = 7;
  const auto a = data::generate_synthetic(spec);
  const auto b = data::generate_synthetic(spec);
  CHECK(bitwise_equal(a.raw_v, b.raw_v));
  CHECK(bitwise_equal(a.raw_t, b.raw_t));
  CHECK(a.interactions == b.interactions);
  CHECK(a.raw_v.rows() == 50);
  CHECK(a.raw_v.cols() == spec.dim_v);
  CHECK(a.raw_t.cols() == spec.dim_t);
  CHECK(a.interactions.size() == 30 * 7);
  std::set<data::Interaction> unique(a.interactions.begin(), a.interactions.end());
  CHECK(unique.size() == a.interactions.size());
  spec.seed += 1;
  CHECK_FALSE(bitwise_equal(data::generate_synthetic(spec).raw_v, a.raw_v));

  data::SyntheticSpec bad;
  bad.shared_rank = 60;
  CHECK_THROWS_AS(data::generate_synthetic(bad), InvalidInputError);
}

TEST_CASE("without shared strength the cross-covariance matches the shuffled null") {
  data::SyntheticSpec spec;
  spec.shared_strength = 0.0;
  spec.num_users = 10;
  spec.interactions_per_user = 5;
  const auto d = data::generate_synthetic(spec);
  const double observed = cross_cov_norm(d.raw_v, d.raw_t);

  std::mt19937_64 rng(123);
  std::vector<std::size_t> perm(spec.num_items);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> null;
  for (int rep = 0; rep < 200; ++rep) {
    std::shuffle(perm.begin(), perm.end(), rng);
    DenseMatrix shuffled(d.raw_t.rows(), d.raw_t.cols());
    for (std::size_t r = 0; r < perm.size(); ++r) {
      std::copy(d.raw_t.row(perm[r]).begin(), d.raw_t.row(perm[r]).end(), shuffled.row(r).begin());
    }
    null.push_back(cross_cov_norm(d.raw_v, shuffled));
  }
  std::sort(null.begin(), null.end());
  // Inside the central 99% Monte-Carlo band.
  CHECK(observed >= null[1]);
  CHECK(observed <= null[198]);

  spec.shared_strength = 3.0;
  const auto planted = data::generate_synthetic(spec);
  CHECK(cross_cov_norm(planted.raw_v, planted.raw_t) > 10.0 * null.back());
}

TEST_CASE("planted shared subspace dominates the cross-covariance spectrum") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    data::SyntheticSpec spec;
    spec.seed = seed;
    spec.num_users = 5;
    spec.interactions_per_user = 1;
    const auto d = data::generate_synthetic(spec);
    const auto c = spectral::cross_covariance(spectral::mean_center(d.raw_v).centered,
                                              spectral::mean_center(d.raw_t).centered);
    const auto s = testing::reference_singular_values(c);
    INFO("seed " << seed << " sigma4 " << s[3] << " sigma5 " << s[4]);
    CHECK(s[3] / s[4] >= 3.0);
  }
}

TEST_CASE("sha256 known answers") {
  CHECK(util::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(util::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto dir = testing::scratch_dir("sha");
  io::write_file(dir / "abc.txt", "abc");
  CHECK(util::sha256_file(dir / "abc.txt") == util::sha256_hex("abc"));
}

TEST_CASE("checkpoint round trip") {
  const auto tm = testing::tiny_model(4, 6, 5, 1, 8);
  checkpoint::Checkpoint ck{tm.state, tm.projectors, nlohmann::json{{"note", "x"}, {"value", 0.1}}};
  const auto bytes = checkpoint::encode_checkpoint(ck);
  CHECK(bytes.substr(0, 4) == "CLRC");
  CHECK(checkpoint::encode_checkpoint(ck) == bytes);
  const auto back = checkpoint::decode_checkpoint(bytes);
  const auto a = ck.state.tensors();
  const auto b = back.state.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(bitwise_equal(*a[i], *b[i]));
  CHECK(bitwise_equal(back.projectors.visual.matrix, ck.projectors.visual.matrix));
  CHECK(bitwise_equal(back.projectors.textual.basis, ck.projectors.textual.basis));
  CHECK(back.projectors.rank() == ck.projectors.rank());
  CHECK(back.projectors.strength() == ck.projectors.strength());
  CHECK(back.projectors.spectrum == ck.projectors.spectrum);
  CHECK(back.projectors.mean_visual == ck.projectors.mean_visual);
  CHECK(back.projectors.textual.side == spectral::Side::kTextual);
  CHECK(back.metadata == ck.metadata);

  const auto dir = testing::scratch_dir("ckpt");
  checkpoint::save_checkpoint(dir / "c.clrc", ck);
  CHECK(io::read_file(dir / "c.clrc") == bytes);

  CHECK_THROWS_AS(checkpoint::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(checkpoint::decode_checkpoint("CLRX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(checkpoint::decode_checkpoint(bytes.substr(0, 10)), FormatError);
  std::string corrupt = bytes;
  corrupt[16] = '!';
  CHECK_THROWS_AS(checkpoint::decode_checkpoint(corrupt), FormatError);
}
