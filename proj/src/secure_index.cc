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

#include "sbf/secure_index.h"

#include <algorithm>
#include <set>
#include <string>

#include "sbf/errors.h"

namespace sbf {

namespace {

constexpr std::string_view kMasterMagic = "SBFMSEC1";
constexpr std::string_view kKeyringMagic = "SBFKRNG1";
constexpr std::string_view kIndexMagic = "SBFUIDX1";

void expect_magic(ByteReader& r, std::string_view magic, const char* what) {
  ByteView got = r.raw(magic.size());
  if (!std::equal(got.begin(), got.end(), magic.begin())) {
    throw FormatError(std::string(what) + ": bad magic");
  }
}

void check_width(const Token& t, const SystemParams& params, const char* what) {
  if (t.size() != params.n_bytes()) {
    throw InvalidArgument(std::string(what) + " must be an n-bit token");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Setup and registration
// ---------------------------------------------------------------------------

SetupResult setup(const SystemParams& params, std::span<const Token> vocabulary,
                  RandomSource& rng) {
  validate(params);
  if (vocabulary.size() != params.l) {
    throw InvalidArgument("vocabulary has " + std::to_string(vocabulary.size()) +
                          " keywords, expected l = " + std::to_string(params.l));
  }
  SetupResult out;
  out.secrets.params = params;
  for (const Token& w : vocabulary) {
    check_width(w, params, "vocabulary keyword");
    if (out.secrets.keyword_secrets.count(w)) {
      throw InvalidArgument("duplicate vocabulary token " + to_hex(w));
    }
    out.secrets.keyword_secrets.emplace(w, PrfKey::random(params.s_bytes(), rng));
  }
  for (std::uint32_t i = 0; i < params.r; ++i) {
    out.secrets.initial_vectors.push_back(rng.bytes(params.n_bytes()));
  }
  out.agent = AgentKeyPair::generate(rng);
  out.secrets.agent_public = out.agent.public_key;
  return out;
}

Bytes MasterSecrets::serialize() const {
  ByteWriter w;
  w.raw(as_bytes(kMasterMagic));
  encode_params(w, params);
  w.raw(agent_public.bytes);
  w.u32(static_cast<std::uint32_t>(initial_vectors.size()));
  for (const Bytes& v : initial_vectors) w.blob8(v);
  w.u32(static_cast<std::uint32_t>(keyword_secrets.size()));
  for (const auto& [token, key] : keyword_secrets) {
    w.blob8(token);
    w.blob8(key.bytes());
  }
  return std::move(w).take();
}

MasterSecrets MasterSecrets::parse(ByteView bytes) {
  ByteReader r(bytes);
  expect_magic(r, kMasterMagic, "master secrets");
  MasterSecrets ms;
  ms.params = decode_params(r);
  ms.agent_public.bytes = r.array<kAgentKeyBytes>();
  const std::uint32_t nv = r.u32();
  if (nv != ms.params.r) throw FormatError("master secrets: expected r initial vectors");
  for (std::uint32_t i = 0; i < nv; ++i) {
    Bytes v = r.blob8();
    if (v.size() != ms.params.n_bytes()) throw FormatError("master secrets: bad vector width");
    ms.initial_vectors.push_back(std::move(v));
  }
  const std::uint32_t nk = r.u32();
  if (nk != ms.params.l) throw FormatError("master secrets: expected l keyword secrets");
  for (std::uint32_t i = 0; i < nk; ++i) {
    Token t = r.blob8();
    Bytes k = r.blob8();
    if (t.size() != ms.params.n_bytes() || k.size() != ms.params.s_bytes()) {
      throw FormatError("master secrets: bad key entry width");
    }
    if (!ms.keyword_secrets.emplace(std::move(t), PrfKey(std::move(k))).second) {
      throw FormatError("master secrets: duplicate keyword");
    }
  }
  r.expect_end("master secrets");
  return ms;
}

namespace {

std::vector<PrfKey> lane_keys(const MasterSecrets& ms, const PrfKey& secret) {
  std::vector<PrfKey> out;
  out.reserve(ms.initial_vectors.size());
  for (const Bytes& v : ms.initial_vectors) out.emplace_back(prf(secret, v, ms.params.s_bits));
  return out;
}

}  // namespace

UserKeyring register_user(const MasterSecrets& ms, std::span<const Token> keywords,
                          const Token& zone) {
  check_width(zone, ms.params, "zone");
  if (keywords.size() > ms.params.q) {
    throw InvalidArgument("owner has " + std::to_string(keywords.size()) +
                          " keywords, more than q = " + std::to_string(ms.params.q));
  }
  UserKeyring kr;
  kr.params = ms.params;
  kr.zone = zone;
  for (const Token& w : keywords) {
    auto it = ms.keyword_secrets.find(w);
    if (it == ms.keyword_secrets.end()) {
      throw InvalidArgument("keyword " + to_hex(w) + " is not in the vocabulary");
    }
    if (kr.keys.count(w)) throw InvalidArgument("keyword " + to_hex(w) + " listed twice");
    kr.keys.emplace(w, lane_keys(ms, it->second));
  }
  return kr;
}

UserKeyring agent_keyring(const MasterSecrets& ms) {
  UserKeyring kr;
  kr.params = ms.params;
  kr.zone = Token(ms.params.n_bytes(), 0);
  for (const auto& [w, secret] : ms.keyword_secrets) kr.keys.emplace(w, lane_keys(ms, secret));
  return kr;
}

Bytes UserKeyring::serialize() const {
  ByteWriter w;
  w.raw(as_bytes(kKeyringMagic));
  encode_params(w, params);
  w.u32(static_cast<std::uint32_t>(keys.size()));
  w.u32(params.r);
  w.blob8(zone);
  for (const auto& [token, lanes] : keys) {
    w.blob8(token);
    for (const PrfKey& k : lanes) w.blob8(k.bytes());
  }
  return std::move(w).take();
}

UserKeyring UserKeyring::parse(ByteView bytes) {
  ByteReader r(bytes);
  expect_magic(r, kKeyringMagic, "keyring");
  UserKeyring kr;
  kr.params = decode_params(r);
  const std::uint32_t count = r.u32();
  const std::uint32_t lanes = r.u32();
  if (lanes != kr.params.r) throw FormatError("keyring: lane count differs from r");
  kr.zone = r.blob8();
  if (kr.zone.size() != kr.params.n_bytes()) throw FormatError("keyring: bad zone width");
  for (std::uint32_t i = 0; i < count; ++i) {
    Token t = r.blob8();
    if (t.size() != kr.params.n_bytes()) throw FormatError("keyring: bad token width");
    std::vector<PrfKey> keys;
    for (std::uint32_t j = 0; j < lanes; ++j) {
      Bytes k = r.blob8();
      if (k.size() != kr.params.s_bytes()) throw FormatError("keyring: bad key width");
      keys.emplace_back(std::move(k));
    }
    if (!kr.keys.emplace(std::move(t), std::move(keys)).second) {
      throw FormatError("keyring: duplicate keyword");
    }
  }
  r.expect_end("keyring");
  return kr;
}

// ---------------------------------------------------------------------------
// Trapdoors and positions
// ---------------------------------------------------------------------------

Trapdoor trapdoor(const UserKeyring& keyring, const Token& keyword) {
  auto it = keyring.keys.find(keyword);
  if (it == keyring.keys.end()) throw NotFound("keyword " + to_hex(keyword) + " not in keyring");
  Trapdoor t;
  t.z.reserve(it->second.size());
  for (const PrfKey& k : it->second) t.z.push_back(prf(k, keyword, keyring.params.s_bits));
  return t;
}

LocationVector location_vector(const Trapdoor& t, const Token& location,
                               const SystemParams& params) {
  LocationVector lv;
  lv.y.reserve(t.z.size());
  for (const Bytes& z : t.z) lv.y.push_back(prf(PrfKey(z), location, params.s_bits));
  return lv;
}

PositionSet positions(const LocationVector& lv, const SystemParams& params) {
  return positions_of(lv.y, params.m, params.r);
}

PositionSet keyword_positions(const UserKeyring& keyring, const Token& keyword,
                              const Token& location) {
  return positions(location_vector(trapdoor(keyring, keyword), location, keyring.params),
                   keyring.params);
}

std::vector<Bytes> blinding_lanes(const Bytes& blinding, std::uint32_t r) {
  std::vector<Bytes> lanes;
  lanes.reserve(r);
  for (std::uint32_t i = 1; i <= r; ++i) {
    ByteWriter w;
    w.raw(blinding);
    w.u32(i);
    lanes.push_back(std::move(w).take());
  }
  return lanes;
}

namespace {

PositionSet blinding_positions(const Bytes& blinding, const SystemParams& params) {
  return positions_of(blinding_lanes(blinding, params.r), params.m, params.r);
}

}  // namespace

// ---------------------------------------------------------------------------
// Index building
// ---------------------------------------------------------------------------

UserIndex build_index(const UserKeyring& keyring, const Token& location,
                      const SystemParams& params, RandomSource& rng) {
  check_width(location, params, "location");
  if (keyring.keys.size() > params.q) {
    throw InvalidArgument("keyring holds more than q keywords");
  }
  UserIndex idx;
  idx.zone = keyring.zone;
  idx.location = location;
  idx.bf = BitFilter(params.m);
  idx.cbf = CountingFilter(params.m);
  idx.obf = BitFilter(params.m);

  for (const auto& [w, lanes] : keyring.keys) {
    const PositionSet ps =
        positions(location_vector(trapdoor(keyring, w), location, params), params);
    idx.bf.insert(ps);
    idx.cbf.insert(ps);
    idx.keywords.push_back(w);
  }
  const std::size_t padding = params.q - keyring.keys.size();
  for (std::size_t i = 0; i < padding; ++i) {
    Bytes b = rng.bytes(params.s_bytes());
    idx.obf.insert(blinding_positions(b, params));
    idx.obf_elements.push_back(std::move(b));
  }
  idx.bf |= idx.obf;
  return idx;
}

void check_invariants(const UserIndex& idx, const SystemParams& p) {
  if (idx.bf.length() != p.m || idx.cbf.length() != p.m || idx.obf.length() != p.m) {
    throw InvalidArgument("index filters must have length m");
  }
  if (!idx.bf.covers(idx.cbf.support())) {
    throw InvalidArgument("index invariant: a counted position is missing from BF");
  }
  if (!idx.bf.covers(idx.obf)) throw InvalidArgument("index invariant: OBF not contained in BF");
  if (idx.keywords.size() + idx.obf_elements.size() > p.q) {
    throw InvalidArgument("index invariant: more than q elements");
  }
  if (idx.cbf.total() != std::uint64_t{p.r} * idx.keywords.size()) {
    throw InvalidArgument("index invariant: counter total differs from r per keyword");
  }
  BitFilter rebuilt(p.m);
  for (const Bytes& b : idx.obf_elements) rebuilt.insert(blinding_positions(b, p));
  if (!(rebuilt == idx.obf)) {
    throw InvalidArgument("index invariant: OBF differs from its blinding elements");
  }
}

Bytes UserIndex::serialize() const {
  ByteWriter w;
  w.raw(as_bytes(kIndexMagic));
  w.blob8(zone);
  w.blob8(location);
  w.u32(static_cast<std::uint32_t>(keywords.size()));
  for (const Token& t : keywords) w.blob8(t);
  w.blob32(bf.to_dense());
  w.blob32(obf.to_dense());
  const std::uint64_t m = cbf.length();
  std::vector<std::uint64_t> nonzero;
  for (std::uint64_t p = 0; p < m; ++p) {
    if (cbf.count(p) != 0) nonzero.push_back(p);
  }
  w.u64(m);
  w.u32(static_cast<std::uint32_t>(nonzero.size()));
  for (std::uint64_t p : nonzero) {
    w.u64(p);
    w.u32(cbf.count(p));
  }
  w.u32(static_cast<std::uint32_t>(obf_elements.size()));
  for (const Bytes& b : obf_elements) w.blob8(b);
  return std::move(w).take();
}

UserIndex UserIndex::parse(ByteView bytes) {
  ByteReader r(bytes);
  expect_magic(r, kIndexMagic, "user index");
  UserIndex idx;
  idx.zone = r.blob8();
  idx.location = r.blob8();
  const std::uint32_t nk = r.u32();
  for (std::uint32_t i = 0; i < nk; ++i) idx.keywords.push_back(r.blob8());
  idx.bf = BitFilter::from_dense(r.blob32());
  idx.obf = BitFilter::from_dense(r.blob32());
  const std::uint64_t m = r.u64();
  if (m != idx.bf.length() || m != idx.obf.length()) throw FormatError("user index: length mismatch");
  idx.cbf = CountingFilter(m);
  const std::uint32_t nz = r.u32();
  for (std::uint32_t i = 0; i < nz; ++i) {
    const std::uint64_t p = r.u64();
    const std::uint32_t c = r.u32();
    if (p >= m || c == 0 || idx.cbf.count(p) != 0) throw FormatError("user index: bad counter entry");
    idx.cbf.insert(PositionSet{std::vector<std::uint64_t>(c, p)});
  }
  const std::uint32_t nb = r.u32();
  for (std::uint32_t i = 0; i < nb; ++i) idx.obf_elements.push_back(r.blob8());
  r.expect_end("user index");
  return idx;
}

// ---------------------------------------------------------------------------
// Packets
// ---------------------------------------------------------------------------

BitFilter UploadPacket::filter(const SystemParams& params) const {
  return decompress_filter(compressed_bf, params.m);
}

Bytes UploadPacket::encode() const {
  ByteWriter w;
  w.blob8(zone);
  w.raw(sealed.handle);
  w.blob16(sealed.ciphertext);
  w.raw(compressed_bf);
  return std::move(w).take();
}

UploadPacket UploadPacket::decode(ByteView bytes, const SystemParams& params) {
  ByteReader r(bytes);
  UploadPacket pkt;
  pkt.zone = r.blob8();
  pkt.sealed.handle = r.array<kHandleBytes>();
  pkt.sealed.ciphertext = r.blob16();
  ByteView rest = r.rest();
  pkt.compressed_bf.assign(rest.begin(), rest.end());
  (void)decompress_filter(pkt.compressed_bf, params.m);
  return pkt;
}

UploadPacket make_upload_packet(const UserIndex& index, const MetaInfo& mi,
                                const AgentPublicKey& agent, const Token& zone,
                                const SystemParams& params, RandomSource& rng) {
  if (zone != index.zone) throw InvalidArgument("upload zone differs from the index zone");
  if (index.bf.length() != params.m) throw InvalidArgument("index filter length differs from m");
  UploadPacket pkt;
  pkt.zone = zone;
  pkt.sealed = seal_record(agent, mi, params, rng);
  pkt.compressed_bf = compress_filter(index.bf);
  return pkt;
}

Bytes RemovalRequest::encode() const {
  ByteWriter w;
  w.blob8(zone);
  w.raw(handle);
  w.u8(replacement ? 1 : 0);
  if (replacement) w.blob32(replacement->encode());
  w.raw(compress_filter(rbf_prime));
  return std::move(w).take();
}

RemovalRequest RemovalRequest::decode(ByteView bytes, const SystemParams& params) {
  ByteReader r(bytes);
  RemovalRequest req;
  req.zone = r.blob8();
  req.handle = r.array<kHandleBytes>();
  const std::uint8_t flag = r.u8();
  if (flag > 1) throw FormatError("removal request: bad replacement flag");
  if (flag == 1) req.replacement = UploadPacket::decode(r.blob32(), params);
  req.rbf_prime = decompress_filter(r.rest(), params.m);
  return req;
}

// ---------------------------------------------------------------------------
// Removal
// ---------------------------------------------------------------------------

RemovalPlan build_removal(const UserIndex& index, const UserKeyring& keyring,
                          const Token& keyword, const Token& location, const Handle& handle,
                          const SystemParams& params, RandomSource& rng) {
  auto kw = std::find(index.keywords.begin(), index.keywords.end(), keyword);
  if (kw == index.keywords.end()) {
    throw NotFound("keyword " + to_hex(keyword) + " is not indexed");
  }
  if (location != index.location) throw InvalidArgument("removal location differs from the index");

  const PositionSet ps =
      positions(location_vector(trapdoor(keyring, keyword), location, params), params);

  RemovalPlan plan;
  plan.updated = index;
  UserIndex& next = plan.updated;
  // Fails on a counter the keyword never contributed to.
  next.cbf.decrement(ps);
  next.keywords.erase(next.keywords.begin() + (kw - index.keywords.begin()));

  BitFilter rbf(params.m);
  rbf.insert(ps);
  BitFilter rbf_prime = rbf;

  std::vector<PositionSet> blinding;
  blinding.reserve(next.obf_elements.size());
  for (const Bytes& b : next.obf_elements) blinding.push_back(blinding_positions(b, params));
  auto consume = [&](std::size_t i) {
    next.obf_elements.erase(next.obf_elements.begin() + static_cast<std::ptrdiff_t>(i));
    blinding.erase(blinding.begin() + static_cast<std::ptrdiff_t>(i));
  };

  // A position only blinding elements use is freed by consuming those
  // elements, so it can be cleared directly.
  for (std::uint64_t p : rbf.set_positions()) {
    if (next.cbf.count(p) > 0) continue;
    for (std::size_t i = blinding.size(); i-- > 0;) {
      const auto& pos = blinding[i].positions;
      if (std::find(pos.begin(), pos.end(), p) != pos.end()) consume(i);
    }
  }

  // Positions another keyword still counts stay on the server and are
  // swapped for a blinding position.
  std::vector<std::uint64_t> shared;
  for (std::uint64_t p : rbf.set_positions()) {
    if (next.cbf.count(p) > 0) shared.push_back(p);
  }

  for (std::uint64_t p : shared) {
    rbf_prime.clear(p);
    // Visit the remaining blinding elements in random order; the first one
    // owning a position no keyword or other element uses supplies the swap.
    std::vector<std::size_t> order(blinding.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);

    bool swapped = false;
    for (std::size_t pick : order) {
      std::vector<std::uint64_t> candidates;
      for (std::uint64_t c : blinding[pick].distinct()) {
        if (next.cbf.count(c) != 0 || !next.bf.test(c) || rbf_prime.test(c)) continue;
        bool used_elsewhere = false;
        for (std::size_t j = 0; j < blinding.size() && !used_elsewhere; ++j) {
          if (j == pick) continue;
          const auto& other = blinding[j].positions;
          used_elsewhere = std::find(other.begin(), other.end(), c) != other.end();
        }
        if (!used_elsewhere) candidates.push_back(c);
      }
      if (candidates.empty()) continue;
      rbf_prime.set(candidates[rng.uniform(candidates.size())]);
      consume(pick);
      ++plan.swaps;
      swapped = true;
      break;
    }
    if (!swapped) {
      throw Error("removal needs a swap but no usable blinding element remains");
    }
  }

  next.obf = BitFilter(params.m);
  for (const PositionSet& b : blinding) next.obf.insert(b);
  next.bf.subtract(rbf_prime);
  check_invariants(next, params);

  plan.request.zone = index.zone;
  plan.request.rbf_prime = std::move(rbf_prime);
  plan.request.handle = handle;
  return plan;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

BitFilter build_and_query(const UserKeyring& agent, std::span<const Token> keywords,
                          const Token& location, const SystemParams& params) {
  if (keywords.empty()) throw InvalidArgument("an AND query needs at least one keyword");
  BitFilter query(params.m);
  for (const Token& w : keywords) {
    query.insert(positions(location_vector(trapdoor(agent, w), location, params), params));
  }
  return query;
}

}  // namespace sbf
