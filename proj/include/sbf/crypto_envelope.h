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

#ifndef SBF_CRYPTO_ENVELOPE_H_
#define SBF_CRYPTO_ENVELOPE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sbf/bytes.h"
#include "sbf/filters.h"
#include "sbf/params.h"
#include "sbf/random.h"

namespace sbf {

// ---------------------------------------------------------------------------
// Keyed pseudo-random function
// ---------------------------------------------------------------------------

// Key for the PRF. Any s-bit PRF output is itself a valid key.
class PrfKey {
 public:
  PrfKey() = default;
  explicit PrfKey(Bytes bytes) : bytes_(std::move(bytes)) {}
  static PrfKey random(std::size_t length, RandomSource& rng) { return PrfKey(rng.bytes(length)); }

  ByteView bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

  friend bool operator==(const PrfKey&, const PrfKey&) = default;
  friend auto operator<=>(const PrfKey&, const PrfKey&) = default;

 private:
  Bytes bytes_;
};

// HMAC-SHA-256 (s <= 256) or HMAC-SHA-512 (s <= 512) truncated to s bits.
// Every call bumps the calling thread's PRF counter.
Bytes prf(const PrfKey& key, ByteView message, std::uint32_t s_bits);

// Cumulative PRF calls made by the current thread.
std::uint64_t prf_calls();

// Counts PRF calls made by this thread while alive.
class PrfCallScope {
 public:
  PrfCallScope() : start_(prf_calls()) {}
  std::uint64_t calls() const { return prf_calls() - start_; }

 private:
  std::uint64_t start_;
};

// ---------------------------------------------------------------------------
// Tokens and meta information
// ---------------------------------------------------------------------------

// n-bit vocabulary token. Free text is canonicalised through an unkeyed hash.
using Token = Bytes;

// SHA-256 of the UTF-8 text truncated to n bits.
Token make_token(std::string_view text, std::uint32_t n_bits);

struct MetaInfo {
  Token pseudonym;
  std::vector<Token> health;
  Token server_id;
  Token memory_index;
  std::vector<Token> emergency;

  // Searchable keywords of the owner: health attributes then emergency info.
  std::vector<Token> keywords() const;

  // pseudonym || u8 count || health || server_id || memory_index ||
  // u8 count || emergency. Every token must be exactly n bits.
  Bytes serialize(std::uint32_t n_bits) const;
  static MetaInfo parse(ByteView bytes, std::uint32_t n_bits);

  friend bool operator==(const MetaInfo&, const MetaInfo&) = default;
};

// Serialized size in bits for `keyword_count` tokens split across the two
// lists.
std::uint64_t meta_info_bits(std::size_t keyword_count, std::uint32_t n_bits);

// ---------------------------------------------------------------------------
// Record sealing under the agents' public key
// ---------------------------------------------------------------------------

inline constexpr std::size_t kHandleBytes = 16;
using Handle = std::array<std::uint8_t, kHandleBytes>;

struct HandleHash {
  std::size_t operator()(const Handle& h) const noexcept {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) v = (v << 8) | h[i];
    return v;
  }
};

inline constexpr std::size_t kAgentKeyBytes = 32;
// Ephemeral X25519 public key plus Poly1305 tag.
inline constexpr std::size_t kSealOverheadBytes = 48;

struct AgentPublicKey {
  std::array<std::uint8_t, kAgentKeyBytes> bytes{};
  friend bool operator==(const AgentPublicKey&, const AgentPublicKey&) = default;
};

struct AgentSecretKey {
  std::array<std::uint8_t, kAgentKeyBytes> bytes{};
  friend bool operator==(const AgentSecretKey&, const AgentSecretKey&) = default;
};

struct AgentKeyPair {
  AgentPublicKey public_key;
  AgentSecretKey secret_key;

  static AgentKeyPair generate(RandomSource& rng);
  // Recomputes the public half from a secret key.
  static AgentKeyPair from_secret(const AgentSecretKey& secret);
};

struct SealedRecord {
  Handle handle{};
  Bytes ciphertext;

  std::uint64_t size_bits() const { return 8 * ciphertext.size(); }

  friend bool operator==(const SealedRecord&, const SealedRecord&) = default;
};

// Hybrid public-key encryption: an ephemeral X25519 key agreement with the
// agents' key wraps an XSalsa20-Poly1305 payload (libsodium sealed box
// layout). The handle is drawn fresh from `rng`. Throws InvalidArgument if
// the serialized record exceeds tau.
SealedRecord seal_record(const AgentPublicKey& agent, const MetaInfo& mi,
                         const SystemParams& params, RandomSource& rng);

// Throws CryptoError on a wrong key or any corruption.
MetaInfo open_record(const AgentKeyPair& agent, const SealedRecord& record,
                     const SystemParams& params);

// ---------------------------------------------------------------------------
// Transport wrapping
// ---------------------------------------------------------------------------

inline constexpr std::size_t kChannelKeyBytes = 32;
inline constexpr std::size_t kTransportNonceBytes = 12;
inline constexpr std::size_t kTransportTagBytes = 16;
inline constexpr std::size_t kTransportOverheadBytes = kTransportNonceBytes + kTransportTagBytes;

struct ChannelKey {
  std::array<std::uint8_t, kChannelKeyBytes> bytes{};
  static ChannelKey random(RandomSource& rng);
  friend bool operator==(const ChannelKey&, const ChannelKey&) = default;
};

// ChaCha20-Poly1305 (IETF) ciphertext with its nonce.
struct TransportEnvelope {
  std::array<std::uint8_t, kTransportNonceBytes> nonce{};
  Bytes ciphertext;  // includes the tag

  // nonce || ciphertext
  Bytes encode() const;
  static TransportEnvelope decode(ByteView bytes);
};

// Random-nonce wrapping for one-off messages.
TransportEnvelope wrap_transport(const ChannelKey& key, ByteView payload, RandomSource& rng);
// Throws CryptoError if the envelope does not authenticate.
Bytes unwrap_transport(const ChannelKey& key, const TransportEnvelope& envelope);

// Counter-nonce wrapping for a session direction. Nonce = be32(direction) ||
// be64(counter), so nonces never repeat under one key as long as the two
// directions use distinct tags.
class TransportSealer {
 public:
  TransportSealer(const ChannelKey& key, std::uint32_t direction)
      : key_(key), direction_(direction) {}
  TransportEnvelope wrap(ByteView payload);
  std::uint64_t sent() const { return counter_; }

 private:
  ChannelKey key_;
  std::uint32_t direction_;
  std::uint64_t counter_ = 0;
};

// Accepts envelopes from one direction with strictly increasing counters.
class TransportOpener {
 public:
  TransportOpener(const ChannelKey& key, std::uint32_t direction)
      : key_(key), direction_(direction) {}
  Bytes unwrap(const TransportEnvelope& envelope);

 private:
  ChannelKey key_;
  std::uint32_t direction_;
  std::uint64_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Sparse filter codec
// ---------------------------------------------------------------------------

// Bits needed for a position in [0, m): ceil(log2 m), zero when m == 1.
std::uint32_t position_width(std::uint64_t m);

// Encoded size for a filter with `popcount` set bits.
std::size_t compressed_size(std::uint64_t popcount, std::uint64_t m);

// be32 popcount, then the ascending set positions as fixed-width big-endian
// integers, bit-packed most significant bit first, zero-padded to a byte.
Bytes compress_filter(const BitFilter& filter);

// Strict inverse of compress_filter. Rejects positions >= m, non-ascending
// positions, nonzero padding and length mismatches.
BitFilter decompress_filter(ByteView bytes, std::uint64_t m);

// ---------------------------------------------------------------------------
// Key material files: one key per file, hex encoded.
// ---------------------------------------------------------------------------

void write_key_file(const std::string& path, ByteView key);
Bytes read_key_file(const std::string& path);

}  // namespace sbf

#endif  // SBF_CRYPTO_ENVELOPE_H_
