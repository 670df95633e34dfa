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

#ifndef SBF_RANDOM_H_
#define SBF_RANDOM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "sbf/bytes.h"

namespace sbf {

// Source of key material, nonces, handles and blinding values.
//
// The default source draws from the operating system CSPRNG. A seeded source
// expands a 64-bit seed into a ChaCha20 keystream so that command line runs
// given `--seed` are reproducible. Seeded sources are for testing and
// simulation; they offer no secrecy beyond the seed itself.
//
// Not thread-safe; give each thread its own source.
class RandomSource {
 public:
  RandomSource() = default;
  static RandomSource system() { return RandomSource(); }
  static RandomSource seeded(std::uint64_t seed);

  bool deterministic() const { return key_.has_value(); }

  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }
  std::uint64_t next_u64();
  // Uniform in [0, bound); bound must be nonzero.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  std::optional<std::array<std::uint8_t, 32>> key_;
  std::uint64_t block_counter_ = 0;
};

// Seedable simulation generator. The raw engine is std::mt19937_64, whose
// output sequence is fixed by the standard; bounded draws use our own
// rejection sampler rather than std::uniform_int_distribution so results are
// identical across standard library implementations.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound); bound must be nonzero.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Initialises libsodium once per process. Safe to call repeatedly.
void ensure_sodium();

// SplitMix64 finalizer; used to derive independent per-trial seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

}  // namespace sbf

#endif  // SBF_RANDOM_H_
