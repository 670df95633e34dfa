// Copyright 2026 The sbfstore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "sbf/bytes.h"
#include "sbf/errors.h"
#include "sbf/params.h"
#include "sbf/random.h"

namespace sbf {
namespace {

TEST(Bytes, HexRoundTrip) {
  Bytes b{0x00, 0x01, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "0001abff");
  EXPECT_EQ(from_hex("0001ABff"), b);
  EXPECT_THROW(from_hex("abc"), FormatError);
  EXPECT_THROW(from_hex("zz"), FormatError);
}

TEST(Bytes, WriterReaderBigEndian) {
  ByteWriter w;
  w.u8(1);
  w.u16(0x0203);
  w.u32(0x04050607);
  w.u64(0x08090a0b0c0d0e0fULL);
  w.blob8(Bytes{0xaa});
  w.blob32(Bytes{0xbb, 0xcc});
  Bytes out = std::move(w).take();
  EXPECT_EQ(to_hex(out), "010203040506070809""0a0b0c0d0e0f01aa00000002bbcc");

  ByteReader r(out);
  EXPECT_EQ(r.u8(), 1);
  EXPECT_EQ(r.u16(), 0x0203);
  EXPECT_EQ(r.u32(), 0x04050607u);
  EXPECT_EQ(r.u64(), 0x08090a0b0c0d0e0fULL);
  EXPECT_EQ(r.blob8(), Bytes{0xaa});
  EXPECT_EQ(r.blob32(), (Bytes{0xbb, 0xcc}));
  EXPECT_NO_THROW(r.expect_end("test"));
}

TEST(Bytes, TruncationThrows) {
  Bytes b{0x00, 0x00, 0x00, 0x05, 0x01};
  ByteReader r(b);
  EXPECT_THROW(r.blob32(), FormatError);
  ByteReader r2(b);
  r2.u8();
  EXPECT_THROW(r2.expect_end("test"), FormatError);
}

TEST(Random, SeededIsReproducible) {
  auto a = RandomSource::seeded(7);
  auto b = RandomSource::seeded(7);
  auto c = RandomSource::seeded(8);
  Bytes x = a.bytes(64);
  EXPECT_EQ(x, b.bytes(64));
  EXPECT_NE(x, c.bytes(64));
  // Successive draws differ.
  EXPECT_NE(x, a.bytes(64));
}

TEST(Random, UniformStaysInRange) {
  auto rng = RandomSource::seeded(1);
  SimRng sim(1);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LT(rng.uniform(7), 7u);
    EXPECT_LT(sim.uniform(13), 13u);
    double u = sim.unit();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Random, TrialSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(trial_seed(42, i));
  EXPECT_EQ(seen.size(), 10000u);
}

// Filter lengths quoted for the reference configurations.
TEST(Params, PublishedFilterLengths) {
  EXPECT_EQ(filter_length(100, 10, 1), 1443u);
  EXPECT_EQ(filter_length(100, 10, 20), 28854u);
  EXPECT_EQ(filter_length(25, 10, 20), 7214u);
  EXPECT_EQ(filter_length(1, 1, 1), 2u);
  // The l=50, r=6 configuration is quoted as 432, one below the ceiling.
  EXPECT_EQ(filter_length(50, 6, 1), 433u);
}

TEST(Params, DeriveAndValidate) {
  SystemParams p = derive_params(100, 10, 1, 15, 50, kDefaultTauBits);
  EXPECT_EQ(p.m, 1443u);
  EXPECT_EQ(p.s_bits, 256u);
  EXPECT_EQ(p.n_bits, 160u);
  EXPECT_THROW(derive_params(10, 10, 1, 11, 50, kDefaultTauBits), InvalidArgument);
  EXPECT_THROW(derive_params(0, 10, 1, 0, 50, kDefaultTauBits), InvalidArgument);
  EXPECT_THROW(derive_params(10, 0, 1, 5, 50, kDefaultTauBits), InvalidArgument);
  EXPECT_THROW(derive_params(10, 1, 1, 5, 0, kDefaultTauBits), InvalidArgument);
  EXPECT_THROW(derive_params(10, 1, 1, 5, 1, kDefaultTauBits, 120), InvalidArgument);
  EXPECT_EQ(with_filter_length(derive_params(50, 6, 1, 20, 50, kDefaultTauBits), 432).m, 432u);
}

TEST(Params, MonotoneInInputs) {
  for (std::uint32_t l = 1; l < 40; ++l) {
    for (std::uint32_t r = 1; r < 12; ++r) {
      for (std::uint32_t g = 1; g < 5; ++g) {
        std::uint64_t m = filter_length(l, r, g);
        EXPECT_LE(m, filter_length(l + 1, r, g));
        EXPECT_LE(m, filter_length(l, r + 1, g));
        EXPECT_LE(m, filter_length(l, r, g + 1));
      }
    }
  }
}

TEST(Params, ExpectedDistinctPublishedValue) {
  double lambda = expected_distinct(1443, 10, 15);
  EXPECT_NEAR(lambda, 142.46, 0.01);
  EXPECT_EQ(std::llround(lambda), 142);
  EXPECT_EQ(expected_distinct(1443, 10, 0), 0.0);
}

TEST(Params, ExpectedDistinctMonotoneAndBounded) {
  double prev = -1;
  for (int i = 0; i < 2000; i += 7) {
    double v = expected_distinct(432, 6, i);
    EXPECT_GT(v, prev);
    EXPECT_LE(v, 432.0);
    prev = v;
  }
}

// Monte Carlo distinct-bit oracle: 20 elements x 6 lanes in 432 positions.
TEST(Params, ExpectedDistinctMatchesMonteCarlo) {
  SimRng rng(20260101);
  const int trials = 100000;
  double total = 0;
  std::vector<std::uint8_t> bits(432);
  for (int t = 0; t < trials; ++t) {
    std::fill(bits.begin(), bits.end(), 0);
    int set = 0;
    for (int i = 0; i < 20 * 6; ++i) {
      auto pos = rng.uniform(432);
      if (!bits[pos]) {
        bits[pos] = 1;
        ++set;
      }
    }
    total += set;
  }
  double mc = total / trials;
  double analytic = expected_distinct(432, 6, 20);
  EXPECT_NEAR(analytic / mc, 1.0, 0.01);
  // Frozen oracle value for regression.
  EXPECT_NEAR(mc, 104.88, 0.1);
}

TEST(Params, ConfigFileAndOverrides) {
  ParamOverrides file = parse_param_text("# comment\nl = 100\nr=10\ngamma=20\nq=15\nbeta=50\ntau_kbits=5\n");
  SystemParams p = file.resolve();
  EXPECT_EQ(p.m, 28854u);
  EXPECT_EQ(p.tau_bits, 5120u);
  ParamOverrides cli;
  cli.values["gamma"] = 1;
  file.merge(cli);
  EXPECT_EQ(file.resolve().m, 1443u);
  EXPECT_THROW(parse_param_text("bogus=1"), FormatError);
  ParamOverrides m_override = parse_param_text("l=50\nr=6\ngamma=1\nq=20\nbeta=50\ntau_kbits=5\nm=432");
  EXPECT_EQ(m_override.resolve().m, 432u);
}

TEST(Params, BinaryRoundTrip) {
  SystemParams p = derive_params(100, 10, 20, 15, 50, kDefaultTauBits);
  ByteWriter w;
  encode_params(w, p);
  Bytes b = std::move(w).take();
  EXPECT_EQ(b.size(), 72u);
  ByteReader r(b);
  EXPECT_EQ(decode_params(r), p);
}

}  // namespace
}  // namespace sbf
