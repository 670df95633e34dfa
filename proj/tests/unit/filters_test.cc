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

#include <gtest/gtest.h>
#include <sodium.h>

#include "sbf/errors.h"
#include "sbf/filters.h"
#include "sbf/random.h"

namespace sbf {
namespace {

Bytes bytes_of(std::string_view s) {
  ByteView v = as_bytes(s);
  return Bytes(v.begin(), v.end());
}

// Independent reference for one lane: SHA-256(be32(i) || e) reduced mod m
// by schoolbook long division over the big-endian digest.
std::uint64_t reference_position(std::uint32_t lane, const Bytes& element, std::uint64_t m) {
  Bytes input{static_cast<std::uint8_t>(lane >> 24), static_cast<std::uint8_t>(lane >> 16),
              static_cast<std::uint8_t>(lane >> 8), static_cast<std::uint8_t>(lane)};
  input.insert(input.end(), element.begin(), element.end());
  std::uint8_t digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, input.data(), input.size());
  unsigned __int128 rem = 0;
  for (std::uint8_t byte : digest) rem = ((rem << 8) | byte) % m;
  return static_cast<std::uint64_t>(rem);
}

std::vector<Bytes> random_lanes(RandomSource& rng, std::size_t r) {
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < r; ++i) out.push_back(rng.bytes(32));
  return out;
}

TEST(Positions, MatchesReferenceReduction) {
  ensure_sodium();
  auto rng = RandomSource::seeded(3);
  for (std::uint64_t m : {2ull, 432ull, 1443ull, 28854ull, (1ull << 40)}) {
    auto lanes = random_lanes(rng, 10);
    PositionSet ps = positions_of(lanes, m, 10);
    ASSERT_EQ(ps.lanes(), 10u);
    for (std::uint32_t i = 0; i < 10; ++i) {
      EXPECT_EQ(ps.positions[i], reference_position(i + 1, lanes[i], m));
    }
  }
}

TEST(Positions, FrozenKnownAnswer) {
  std::vector<Bytes> lanes{bytes_of("alpha"), bytes_of("beta"), bytes_of("gamma")};
  PositionSet ps = positions_of(lanes, 1443, 3);
  for (std::uint32_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ps.positions[i], reference_position(i + 1, lanes[i], 1443));
  }
  EXPECT_EQ(ps, positions_of(lanes, 1443, 3));
}

TEST(Positions, RejectsWrongLaneCount) {
  std::vector<Bytes> lanes{bytes_of("a"), bytes_of("b")};
  EXPECT_THROW(positions_of(lanes, 100, 3), InvalidArgument);
  EXPECT_THROW(positions_of(lanes, 0, 2), InvalidArgument);
}

// Chi-square against the binomial oracle for m = 2.
TEST(Positions, UniformOverTwoBuckets) {
  auto rng = RandomSource::seeded(11);
  const int n = 10000;
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<Bytes> lane{rng.bytes(16)};
    ones += static_cast<int>(positions_of(lane, 2, 1).positions[0]);
  }
  double sigma = std::sqrt(n * 0.25);
  EXPECT_LT(std::abs(ones - n / 2.0), 3 * sigma);
}

// Birthday-collision oracle: E[distinct] = m(1 - (1 - 1/m)^r).
TEST(Positions, DistinctCountMatchesBirthdayOracle) {
  auto rng = RandomSource::seeded(12);
  const int trials = 10000;
  double total = 0;
  for (int t = 0; t < trials; ++t) {
    total += static_cast<double>(positions_of(random_lanes(rng, 10), 1443, 10).distinct().size());
  }
  double mean = total / trials;
  double oracle = 1443.0 * (1.0 - std::pow(1.0 - 1.0 / 1443.0, 10));
  EXPECT_GE(mean, 9.96);
  EXPECT_NEAR(mean, oracle, 0.01);
}

TEST(BitFilter, InsertAndQuery) {
  BitFilter bf(100);
  PositionSet ps{{3, 7, 7, 99}};
  bf.insert(ps);
  EXPECT_EQ(bf.popcount(), 3u);
  EXPECT_TRUE(bf.contains(ps));
  EXPECT_FALSE(bf.contains(PositionSet{{3, 8}}));
  EXPECT_THROW(bf.insert(PositionSet{{100}}), InvalidArgument);
  EXPECT_EQ(bf.set_positions(), (std::vector<std::uint64_t>{3, 7, 99}));
}

TEST(BitFilter, NoFalseNegatives) {
  auto rng = RandomSource::seeded(13);
  BitFilter bf(1443);
  std::vector<PositionSet> inserted;
  for (int k = 0; k < 40; ++k) {
    inserted.push_back(positions_of(random_lanes(rng, 10), 1443, 10));
    bf.insert(inserted.back());
  }
  for (const auto& ps : inserted) EXPECT_TRUE(bf.contains(ps));
}

TEST(BitFilter, OrIsCommutativeAndIdempotent) {
  auto rng = RandomSource::seeded(14);
  for (int t = 0; t < 100; ++t) {
    BitFilter a(257), b(257);
    for (int i = 0; i < 30; ++i) {
      a.set(rng.uniform(257));
      b.set(rng.uniform(257));
    }
    EXPECT_EQ(filter_or(a, b), filter_or(b, a));
    EXPECT_EQ(filter_or(a, a), a);
    EXPECT_TRUE(filter_or(a, b).covers(a));
  }
  EXPECT_THROW(filter_or(BitFilter(3), BitFilter(4)), InvalidArgument);
}

TEST(BitFilter, DenseRoundTripAndPadding) {
  auto rng = RandomSource::seeded(15);
  for (std::uint64_t m : {1ull, 7ull, 64ull, 65ull, 1443ull}) {
    BitFilter bf(m);
    for (int i = 0; i < 20; ++i) bf.set(rng.uniform(m));
    EXPECT_EQ(BitFilter::from_dense(bf.to_dense()), bf);
  }
  BitFilter small(5);
  Bytes dense = small.to_dense();
  dense.back() |= 0x80;  // bit 7 is beyond m
  EXPECT_THROW(BitFilter::from_dense(dense), FormatError);
}

TEST(CountingFilter, InsertDecrementUnderflow) {
  CountingFilter cbf(10);
  PositionSet ps{{1, 2, 2}};
  cbf.insert(ps);
  cbf.insert(ps);
  EXPECT_EQ(cbf.count(1), 2u);
  EXPECT_EQ(cbf.count(2), 4u);
  EXPECT_EQ(cbf.total(), 6u);
  cbf.decrement(ps);
  cbf.decrement(ps);
  EXPECT_EQ(cbf.total(), 0u);
  try {
    cbf.decrement(PositionSet{{4, 5}});
    FAIL() << "expected underflow";
  } catch (const UnderflowError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  // Failed decrement left nothing behind.
  EXPECT_EQ(cbf.total(), 0u);
}

// Multiset oracle: random insert/decrement sequences track a plain count map.
TEST(CountingFilter, MatchesMultisetOracle) {
  SimRng rng(16);
  CountingFilter cbf(64);
  std::vector<PositionSet> live;
  std::vector<std::uint32_t> oracle(64, 0);
  for (int step = 0; step < 2000; ++step) {
    if (live.empty() || rng.uniform(3) != 0) {
      PositionSet ps;
      for (int i = 0; i < 4; ++i) ps.positions.push_back(rng.uniform(64));
      cbf.insert(ps);
      for (auto p : ps.positions) ++oracle[p];
      live.push_back(ps);
    } else {
      std::size_t idx = rng.uniform(live.size());
      cbf.decrement(live[idx]);
      for (auto p : live[idx].positions) --oracle[p];
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    if (step % 97 == 0) {
      for (std::uint64_t p = 0; p < 64; ++p) ASSERT_EQ(cbf.count(p), oracle[p]);
    }
  }
  BitFilter support = cbf.support();
  for (std::uint64_t p = 0; p < 64; ++p) EXPECT_EQ(support.test(p), oracle[p] > 0);
}

}  // namespace
}  // namespace sbf
