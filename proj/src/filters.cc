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

#include "sbf/filters.h"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <string>

#include "sbf/errors.h"
#include "sbf/random.h"

namespace sbf {

std::vector<std::uint64_t> PositionSet::distinct() const {
  std::vector<std::uint64_t> out = positions;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PositionSet positions_of(std::span<const Bytes> elements, std::uint64_t m,
                         std::size_t expected_lanes) {
  if (m == 0) throw InvalidArgument("filter length must be positive");
  if (elements.size() != expected_lanes) {
    throw InvalidArgument("expected " + std::to_string(expected_lanes) + " lane elements, got " +
                          std::to_string(elements.size()));
  }
  ensure_sodium();
  PositionSet out;
  out.positions.reserve(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto lane = static_cast<std::uint32_t>(i + 1);
    const std::uint8_t prefix[4] = {static_cast<std::uint8_t>(lane >> 24),
                                    static_cast<std::uint8_t>(lane >> 16),
                                    static_cast<std::uint8_t>(lane >> 8),
                                    static_cast<std::uint8_t>(lane)};
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, prefix, sizeof prefix);
    crypto_hash_sha256_update(&st, elements[i].data(), elements[i].size());
    std::uint8_t digest[crypto_hash_sha256_BYTES];
    crypto_hash_sha256_final(&st, digest);
    unsigned __int128 acc = 0;
    for (std::uint8_t b : digest) acc = ((acc << 8) | b) % m;
    out.positions.push_back(static_cast<std::uint64_t>(acc));
  }
  return out;
}

BitFilter::BitFilter(std::uint64_t length) : length_(length), words_((length + 63) / 64, 0) {}

void BitFilter::check(std::uint64_t pos) const {
  if (pos >= length_) {
    throw InvalidArgument("position " + std::to_string(pos) + " out of range for length " +
                          std::to_string(length_));
  }
}

bool BitFilter::test(std::uint64_t pos) const {
  check(pos);
  return (words_[pos / 64] >> (pos % 64)) & 1;
}

void BitFilter::set(std::uint64_t pos) {
  check(pos);
  words_[pos / 64] |= std::uint64_t{1} << (pos % 64);
}

void BitFilter::clear(std::uint64_t pos) {
  check(pos);
  words_[pos / 64] &= ~(std::uint64_t{1} << (pos % 64));
}

std::uint64_t BitFilter::popcount() const {
  std::uint64_t n = 0;
  for (std::uint64_t w : words_) n += std::popcount(w);
  return n;
}

void BitFilter::insert(const PositionSet& ps) {
  for (std::uint64_t p : ps.positions) check(p);
  for (std::uint64_t p : ps.positions) set(p);
}

bool BitFilter::contains(const PositionSet& ps) const {
  if (ps.positions.empty()) return false;
  return std::all_of(ps.positions.begin(), ps.positions.end(),
                     [&](std::uint64_t p) { return test(p); });
}

bool BitFilter::covers(const BitFilter& other) const {
  if (other.length_ != length_) throw InvalidArgument("filter length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if ((other.words_[i] & ~words_[i]) != 0) return false;
  }
  return true;
}

std::vector<std::uint64_t> BitFilter::set_positions() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    std::uint64_t w = words_[i];
    while (w != 0) {
      out.push_back(i * 64 + std::countr_zero(w));
      w &= w - 1;
    }
  }
  return out;
}

BitFilter& BitFilter::operator|=(const BitFilter& other) {
  if (other.length_ != length_) throw InvalidArgument("filter length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

BitFilter& BitFilter::subtract(const BitFilter& other) {
  if (other.length_ != length_) throw InvalidArgument("filter length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
  return *this;
}

Bytes BitFilter::to_dense() const {
  ByteWriter w;
  w.u64(length_);
  const std::uint64_t nbytes = (length_ + 7) / 8;
  for (std::uint64_t i = 0; i < nbytes; ++i) {
    w.u8(static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8))));
  }
  return std::move(w).take();
}

BitFilter BitFilter::from_dense(ByteView bytes) {
  ByteReader r(bytes);
  const std::uint64_t length = r.u64();
  const std::uint64_t nbytes = (length + 7) / 8;
  if (nbytes != r.remaining()) throw FormatError("dense filter: body length mismatch");
  BitFilter out(length);
  for (std::uint64_t i = 0; i < nbytes; ++i) {
    out.words_[i / 8] |= std::uint64_t{r.u8()} << (8 * (i % 8));
  }
  const std::uint64_t tail = length % 64;
  if (tail != 0 && (out.words_.back() >> tail) != 0) {
    throw FormatError("dense filter: padding bits set");
  }
  return out;
}

BitFilter filter_or(const BitFilter& a, const BitFilter& b) {
  BitFilter out = a;
  out |= b;
  return out;
}

std::uint32_t CountingFilter::count(std::uint64_t pos) const {
  if (pos >= counts_.size()) throw InvalidArgument("position out of range");
  return counts_[pos];
}

void CountingFilter::insert(const PositionSet& ps) {
  std::map<std::uint64_t, std::uint32_t> hits;
  for (std::uint64_t p : ps.positions) {
    if (p >= counts_.size()) throw InvalidArgument("position out of range");
    ++hits[p];
  }
  for (const auto& [p, n] : hits) {
    if (counts_[p] > std::numeric_limits<std::uint32_t>::max() - n) {
      throw InvalidArgument("counter overflow");
    }
  }
  for (const auto& [p, n] : hits) counts_[p] += n;
}

void CountingFilter::decrement(const PositionSet& ps) {
  std::map<std::uint64_t, std::uint32_t> hits;
  for (std::uint64_t p : ps.positions) {
    if (p >= counts_.size()) throw InvalidArgument("position out of range");
    ++hits[p];
  }
  for (const auto& [p, n] : hits) {
    if (counts_[p] < n) {
      throw UnderflowError("counter underflow at position " + std::to_string(p), p);
    }
  }
  for (const auto& [p, n] : hits) counts_[p] -= n;
}

std::uint64_t CountingFilter::total() const {
  std::uint64_t t = 0;
  for (std::uint32_t c : counts_) t += c;
  return t;
}

BitFilter CountingFilter::support() const {
  BitFilter out(counts_.size());
  for (std::uint64_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] != 0) out.set(i);
  }
  return out;
}

}  // namespace sbf
