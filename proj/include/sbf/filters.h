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

#ifndef SBF_FILTERS_H_
#define SBF_FILTERS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sbf/bytes.h"

namespace sbf {

// The r target positions of one element, lane order preserved. Two lanes
// may land on the same position.
struct PositionSet {
  std::vector<std::uint64_t> positions;

  std::size_t lanes() const { return positions.size(); }
  // Sorted, duplicates removed.
  std::vector<std::uint64_t> distinct() const;

  friend bool operator==(const PositionSet&, const PositionSet&) = default;
};

// Lane i (1-based) maps element i to SHA-256(be32(i) || element_i) mod m,
// reading the digest as a big-endian integer. Throws InvalidArgument if
// `elements.size() != expected_lanes` or m == 0.
PositionSet positions_of(std::span<const Bytes> elements, std::uint64_t m,
                         std::size_t expected_lanes);

// Fixed-length bit array. Position 0 is bit 0 of word 0.
class BitFilter {
 public:
  BitFilter() = default;
  explicit BitFilter(std::uint64_t length);

  std::uint64_t length() const { return length_; }
  bool test(std::uint64_t pos) const;
  void set(std::uint64_t pos);
  void clear(std::uint64_t pos);
  std::uint64_t popcount() const;
  bool empty() const { return popcount() == 0; }

  // Sets every position in `ps`. Throws InvalidArgument on out-of-range.
  void insert(const PositionSet& ps);
  // True iff every position in `ps` is set.
  bool contains(const PositionSet& ps) const;
  // True iff every set bit of `other` is set here.
  bool covers(const BitFilter& other) const;

  // Ascending positions of the set bits.
  std::vector<std::uint64_t> set_positions() const;

  BitFilter& operator|=(const BitFilter& other);
  // Clears every bit set in `other`.
  BitFilter& subtract(const BitFilter& other);

  // 8-byte big-endian length, then ceil(m/8) bytes; bit 0 of byte 0 is
  // position 0.
  Bytes to_dense() const;
  static BitFilter from_dense(ByteView bytes);

  friend bool operator==(const BitFilter&, const BitFilter&) = default;

 private:
  void check(std::uint64_t pos) const;

  std::uint64_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

// Bitwise OR. Throws InvalidArgument on length mismatch.
BitFilter filter_or(const BitFilter& a, const BitFilter& b);

// Per-position counters. Decrementing below zero is an error.
class CountingFilter {
 public:
  CountingFilter() = default;
  explicit CountingFilter(std::uint64_t length) : counts_(length, 0) {}

  std::uint64_t length() const { return counts_.size(); }
  std::uint32_t count(std::uint64_t pos) const;

  // Increments once per lane, so a position hit by two lanes gains two.
  void insert(const PositionSet& ps);
  // Inverse of insert. Validates the whole set before touching any counter;
  // throws UnderflowError naming the first position that would go negative.
  void decrement(const PositionSet& ps);

  std::uint64_t total() const;
  // Positions with a nonzero counter.
  BitFilter support() const;

  friend bool operator==(const CountingFilter&, const CountingFilter&) = default;

 private:
  std::vector<std::uint32_t> counts_;
};

}  // namespace sbf

#endif  // SBF_FILTERS_H_
