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

#include "sbf/crypto_envelope.h"

#include <sodium.h>

#include <fstream>
#include <sstream>

#include "sbf/errors.h"

namespace sbf {

static_assert(kSealOverheadBytes == crypto_box_SEALBYTES);
static_assert(kAgentKeyBytes == crypto_box_PUBLICKEYBYTES);
static_assert(kAgentKeyBytes == crypto_box_SECRETKEYBYTES);
static_assert(kChannelKeyBytes == crypto_aead_chacha20poly1305_ietf_KEYBYTES);
static_assert(kTransportNonceBytes == crypto_aead_chacha20poly1305_ietf_NPUBBYTES);
static_assert(kTransportTagBytes == crypto_aead_chacha20poly1305_ietf_ABYTES);

namespace {

thread_local std::uint64_t t_prf_calls = 0;

void check_token(const Token& t, std::size_t n_bytes, const char* what) {
  if (t.size() != n_bytes) {
    throw InvalidArgument(std::string(what) + " token must be " + std::to_string(n_bytes) +
                          " bytes, got " + std::to_string(t.size()));
  }
}

}  // namespace

Bytes prf(const PrfKey& key, ByteView message, std::uint32_t s_bits) {
  ensure_sodium();
  if (s_bits == 0 || s_bits % 8 != 0 || s_bits > 512) {
    throw InvalidArgument("PRF width must be a whole number of bytes up to 512 bits");
  }
  ++t_prf_calls;
  Bytes out(s_bits / 8);
  if (s_bits <= 256) {
    crypto_auth_hmacsha256_state st;
    std::uint8_t mac[crypto_auth_hmacsha256_BYTES];
    crypto_auth_hmacsha256_init(&st, key.bytes().data(), key.size());
    crypto_auth_hmacsha256_update(&st, message.data(), message.size());
    crypto_auth_hmacsha256_final(&st, mac);
    std::copy(mac, mac + out.size(), out.begin());
  } else {
    crypto_auth_hmacsha512_state st;
    std::uint8_t mac[crypto_auth_hmacsha512_BYTES];
    crypto_auth_hmacsha512_init(&st, key.bytes().data(), key.size());
    crypto_auth_hmacsha512_update(&st, message.data(), message.size());
    crypto_auth_hmacsha512_final(&st, mac);
    std::copy(mac, mac + out.size(), out.begin());
  }
  return out;
}

std::uint64_t prf_calls() { return t_prf_calls; }

Token make_token(std::string_view text, std::uint32_t n_bits) {
  ensure_sodium();
  if (n_bits == 0 || n_bits % 8 != 0 || n_bits > 256) {
    throw InvalidArgument("token width must be a whole number of bytes up to 256 bits");
  }
  std::uint8_t digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
  return Token(digest, digest + n_bits / 8);
}

std::vector<Token> MetaInfo::keywords() const {
  std::vector<Token> out = health;
  out.insert(out.end(), emergency.begin(), emergency.end());
  return out;
}

Bytes MetaInfo::serialize(std::uint32_t n_bits) const {
  const std::size_t n = n_bits / 8;
  check_token(pseudonym, n, "pseudonym");
  check_token(server_id, n, "server id");
  check_token(memory_index, n, "memory index");
  if (health.size() > 0xff || emergency.size() > 0xff) {
    throw InvalidArgument("meta information lists are limited to 255 tokens");
  }
  ByteWriter w;
  w.raw(pseudonym);
  w.u8(static_cast<std::uint8_t>(health.size()));
  for (const Token& t : health) {
    check_token(t, n, "health attribute");
    w.raw(t);
  }
  w.raw(server_id);
  w.raw(memory_index);
  w.u8(static_cast<std::uint8_t>(emergency.size()));
  for (const Token& t : emergency) {
    check_token(t, n, "emergency info");
    w.raw(t);
  }
  return std::move(w).take();
}

MetaInfo MetaInfo::parse(ByteView bytes, std::uint32_t n_bits) {
  const std::size_t n = n_bits / 8;
  ByteReader r(bytes);
  MetaInfo mi;
  mi.pseudonym = r.copy(n);
  const std::size_t nh = r.u8();
  for (std::size_t i = 0; i < nh; ++i) mi.health.push_back(r.copy(n));
  mi.server_id = r.copy(n);
  mi.memory_index = r.copy(n);
  const std::size_t ne = r.u8();
  for (std::size_t i = 0; i < ne; ++i) mi.emergency.push_back(r.copy(n));
  r.expect_end("meta information");
  return mi;
}

std::uint64_t meta_info_bits(std::size_t keyword_count, std::uint32_t n_bits) {
  return (keyword_count + 3) * std::uint64_t{n_bits} + 16;
}

AgentKeyPair AgentKeyPair::generate(RandomSource& rng) {
  ensure_sodium();
  auto seed = rng.array<crypto_box_SEEDBYTES>();
  AgentKeyPair kp;
  crypto_box_seed_keypair(kp.public_key.bytes.data(), kp.secret_key.bytes.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

AgentKeyPair AgentKeyPair::from_secret(const AgentSecretKey& secret) {
  ensure_sodium();
  AgentKeyPair kp;
  kp.secret_key = secret;
  crypto_scalarmult_base(kp.public_key.bytes.data(), secret.bytes.data());
  return kp;
}

SealedRecord seal_record(const AgentPublicKey& agent, const MetaInfo& mi,
                         const SystemParams& params, RandomSource& rng) {
  ensure_sodium();
  const Bytes plain = mi.serialize(params.n_bits);
  if (8 * plain.size() > params.tau_bits) {
    throw InvalidArgument("meta information is " + std::to_string(8 * plain.size()) +
                          " bits, exceeding tau = " + std::to_string(params.tau_bits));
  }
  SealedRecord rec;
  rng.fill(rec.handle);

  // Same layout as crypto_box_seal, with the ephemeral key drawn from `rng`
  // so seeded runs reproduce.
  std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> eph_pk{};
  std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> eph_sk{};
  auto seed = rng.array<crypto_box_SEEDBYTES>();
  crypto_box_seed_keypair(eph_pk.data(), eph_sk.data(), seed.data());
  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, nonce.size());
  crypto_generichash_update(&st, eph_pk.data(), eph_pk.size());
  crypto_generichash_update(&st, agent.bytes.data(), agent.bytes.size());
  crypto_generichash_final(&st, nonce.data(), nonce.size());

  rec.ciphertext.resize(crypto_box_SEALBYTES + plain.size());
  std::copy(eph_pk.begin(), eph_pk.end(), rec.ciphertext.begin());
  if (crypto_box_easy(rec.ciphertext.data() + eph_pk.size(), plain.data(), plain.size(),
                      nonce.data(), agent.bytes.data(), eph_sk.data()) != 0) {
    throw CryptoError("record encryption failed");
  }
  sodium_memzero(eph_sk.data(), eph_sk.size());
  sodium_memzero(seed.data(), seed.size());
  return rec;
}

MetaInfo open_record(const AgentKeyPair& agent, const SealedRecord& record,
                     const SystemParams& params) {
  ensure_sodium();
  if (record.ciphertext.size() < crypto_box_SEALBYTES) {
    throw CryptoError("sealed record is truncated");
  }
  Bytes plain(record.ciphertext.size() - crypto_box_SEALBYTES);
  if (crypto_box_seal_open(plain.data(), record.ciphertext.data(), record.ciphertext.size(),
                           agent.public_key.bytes.data(), agent.secret_key.bytes.data()) != 0) {
    throw CryptoError("sealed record failed to authenticate");
  }
  try {
    return MetaInfo::parse(plain, params.n_bits);
  } catch (const FormatError& e) {
    throw CryptoError(std::string("sealed record decrypted to malformed data: ") + e.what());
  }
}

ChannelKey ChannelKey::random(RandomSource& rng) {
  ChannelKey k;
  rng.fill(k.bytes);
  return k;
}

Bytes TransportEnvelope::encode() const {
  Bytes out(nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

TransportEnvelope TransportEnvelope::decode(ByteView bytes) {
  if (bytes.size() < kTransportOverheadBytes) throw FormatError("transport envelope truncated");
  TransportEnvelope env;
  std::copy(bytes.begin(), bytes.begin() + kTransportNonceBytes, env.nonce.begin());
  env.ciphertext.assign(bytes.begin() + kTransportNonceBytes, bytes.end());
  return env;
}

namespace {

TransportEnvelope aead_wrap(const ChannelKey& key,
                            const std::array<std::uint8_t, kTransportNonceBytes>& nonce,
                            ByteView payload) {
  ensure_sodium();
  TransportEnvelope env;
  env.nonce = nonce;
  env.ciphertext.resize(payload.size() + kTransportTagBytes);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(env.ciphertext.data(), &clen, payload.data(),
                                            payload.size(), nullptr, 0, nullptr,
                                            env.nonce.data(), key.bytes.data());
  env.ciphertext.resize(clen);
  return env;
}

}  // namespace

TransportEnvelope wrap_transport(const ChannelKey& key, ByteView payload, RandomSource& rng) {
  return aead_wrap(key, rng.array<kTransportNonceBytes>(), payload);
}

Bytes unwrap_transport(const ChannelKey& key, const TransportEnvelope& env) {
  ensure_sodium();
  if (env.ciphertext.size() < kTransportTagBytes) throw CryptoError("transport envelope truncated");
  Bytes out(env.ciphertext.size() - kTransportTagBytes);
  unsigned long long mlen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &mlen, nullptr, env.ciphertext.data(),
                                                env.ciphertext.size(), nullptr, 0,
                                                env.nonce.data(), key.bytes.data()) != 0) {
    throw CryptoError("transport envelope failed to authenticate");
  }
  out.resize(mlen);
  return out;
}

TransportEnvelope TransportSealer::wrap(ByteView payload) {
  std::array<std::uint8_t, kTransportNonceBytes> nonce{};
  for (int i = 0; i < 4; ++i) nonce[i] = static_cast<std::uint8_t>(direction_ >> (24 - 8 * i));
  const std::uint64_t c = counter_++;
  for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(c >> (56 - 8 * i));
  return aead_wrap(key_, nonce, payload);
}

Bytes TransportOpener::unwrap(const TransportEnvelope& env) {
  ByteReader r(env.nonce);
  const std::uint32_t direction = r.u32();
  const std::uint64_t counter = r.u64();
  if (direction != direction_) throw CryptoError("transport envelope from the wrong direction");
  if (counter < next_) throw CryptoError("transport envelope replayed or reordered");
  Bytes out = unwrap_transport(key_, env);
  next_ = counter + 1;
  return out;
}

void write_key_file(const std::string& path, ByteView key) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFound("cannot write key file: " + path);
  out << to_hex(key) << '\n';
  if (!out) throw Error("failed writing key file: " + path);
}

Bytes read_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open key file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_hex(ss.str());
}

}  // namespace sbf
