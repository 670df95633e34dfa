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

#include "sbf/random.h"

#include <sodium.h>

#include "sbf/errors.h"

namespace sbf {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw CryptoError("libsodium initialisation failed");
  }
};

}  // namespace

void ensure_sodium() { static SodiumInit init; }

RandomSource RandomSource::seeded(std::uint64_t seed) {
  ensure_sodium();
  RandomSource out;
  std::array<std::uint8_t, 32> key{};
  ByteWriter w;
  w.raw(as_bytes("sbfstore seeded random source"));
  w.u64(seed);
  crypto_generichash(key.data(), key.size(), w.bytes().data(), w.size(), nullptr, 0);
  out.key_ = key;
  return out;
}

void RandomSource::fill(std::span<std::uint8_t> out) {
  ensure_sodium();
  if (out.empty()) return;
  if (!key_) {
    randombytes_buf(out.data(), out.size());
    return;
  }
  // Each call consumes a fresh 96-bit nonce so streams never overlap.
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
  std::uint64_t c = block_counter_++;
  for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(c >> (56 - 8 * i));
  crypto_stream_chacha20_ietf(out.data(), out.size(), nonce.data(), key_->data());
}

Bytes RandomSource::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (std::uint8_t x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("uniform bound must be nonzero");
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

std::uint64_t SimRng::uniform(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("uniform bound must be nonzero");
  // Lemire's multiply-shift with rejection.
  unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return mix_seed(mix_seed(master_seed) ^ mix_seed(trial_index + 0x632be59bd9b4e019ULL));
}

}  // namespace sbf
