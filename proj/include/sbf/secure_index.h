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

#ifndef SBF_SECURE_INDEX_H_
#define SBF_SECURE_INDEX_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbf/bytes.h"
#include "sbf/crypto_envelope.h"
#include "sbf/filters.h"
#include "sbf/params.h"
#include "sbf/random.h"

namespace sbf {

// Key generation authority state. Holds one secret per vocabulary keyword
// and the r initial vectors every user and agent derive lane keys from.
struct MasterSecrets {
  SystemParams params;
  std::map<Token, PrfKey> keyword_secrets;
  std::vector<Bytes> initial_vectors;
  AgentPublicKey agent_public;

  bool in_vocabulary(const Token& keyword) const { return keyword_secrets.count(keyword) != 0; }

  Bytes serialize() const;
  static MasterSecrets parse(ByteView bytes);
};

struct SetupResult {
  MasterSecrets secrets;
  AgentKeyPair agent;
};

// Draws l keyword secrets, r initial vectors and the agents' key pair.
// Throws InvalidArgument on a vocabulary whose size differs from l, on
// duplicate tokens, or on tokens of the wrong width.
SetupResult setup(const SystemParams& params, std::span<const Token> vocabulary,
                  RandomSource& rng);

// Lane keys k_1..k_r for each keyword a holder may index or search.
struct UserKeyring {
  SystemParams params;
  Token zone;
  std::map<Token, std::vector<PrfKey>> keys;

  bool has(const Token& keyword) const { return keys.count(keyword) != 0; }

  Bytes serialize() const;
  static UserKeyring parse(ByteView bytes);
};

// Registers a data owner: k_i = f(secret_j, v_i) for each of the owner's d
// keywords, d * r PRF calls in total. Throws InvalidArgument on unknown or
// repeated keywords and when d > q.
UserKeyring register_user(const MasterSecrets& ms, std::span<const Token> keywords,
                          const Token& zone);

// Lane keys for the whole vocabulary, for query-side agents. No q limit.
UserKeyring agent_keyring(const MasterSecrets& ms);

struct Trapdoor {
  std::vector<Bytes> z;
};

struct LocationVector {
  std::vector<Bytes> y;
};

// z_i = f(w, k_i); r PRF calls. Throws NotFound for an unregistered keyword.
Trapdoor trapdoor(const UserKeyring& keyring, const Token& keyword);

// y_i = f(location, z_i); r PRF calls.
LocationVector location_vector(const Trapdoor& t, const Token& location,
                               const SystemParams& params);

PositionSet positions(const LocationVector& lv, const SystemParams& params);

// keyword at location -> filter positions, through trapdoor and location
// vector. 2r PRF calls.
PositionSet keyword_positions(const UserKeyring& keyring, const Token& keyword,
                              const Token& location);

// Lane elements of a blinding value: b || be32(i) for i = 1..r.
std::vector<Bytes> blinding_lanes(const Bytes& blinding, std::uint32_t r);

// A data owner's index for one zone and location.
struct UserIndex {
  Token zone;
  Token location;
  std::vector<Token> keywords;     // keywords currently indexed
  BitFilter bf;                    // uploaded filter, real and blinding bits
  CountingFilter cbf;              // real keywords only
  BitFilter obf;                   // blinding bits
  std::vector<Bytes> obf_elements; // unconsumed blinding values

  Bytes serialize() const;
  static UserIndex parse(ByteView bytes);
};

// Throws InvalidArgument naming the first violated invariant.
void check_invariants(const UserIndex& index, const SystemParams& params);

// Indexes every keyword of the keyring at `location`, pads with q - d
// blinding values into the OBF and ORs it into the uploaded filter.
UserIndex build_index(const UserKeyring& keyring, const Token& location,
                      const SystemParams& params, RandomSource& rng);

struct UploadPacket {
  Token zone;
  Bytes compressed_bf;
  SealedRecord sealed;

  BitFilter filter(const SystemParams& params) const;

  // blob8 zone || handle || blob16 ciphertext || compressed filter
  Bytes encode() const;
  static UploadPacket decode(ByteView bytes, const SystemParams& params);
};

// Seals `mi` for the agents and attaches the compressed filter. Throws
// InvalidArgument if `zone` differs from the zone the index was built for.
UploadPacket make_upload_packet(const UserIndex& index, const MetaInfo& mi,
                                const AgentPublicKey& agent, const Token& zone,
                                const SystemParams& params, RandomSource& rng);

struct RemovalRequest {
  Token zone;
  BitFilter rbf_prime;
  Handle handle{};
  std::optional<UploadPacket> replacement;

  // blob8 zone || handle || u8 flag || [blob32 replacement] || compressed RBF'
  Bytes encode() const;
  static RemovalRequest decode(ByteView bytes, const SystemParams& params);
};

struct RemovalPlan {
  RemovalRequest request;
  UserIndex updated;
  std::size_t swaps = 0;
};

// Builds the pruning filter for one keyword of an uploaded record. Blinding
// values that share a position with the keyword are consumed so that
// position can be cleared. Positions still counted by another keyword are
// replaced by a position of a blinding value that nothing else uses; that
// blinding value is consumed too. Throws NotFound for a keyword that is not
// indexed, and Error when no blinding value can supply a swap.
RemovalPlan build_removal(const UserIndex& index, const UserKeyring& keyring,
                          const Token& keyword, const Token& location, const Handle& handle,
                          const SystemParams& params, RandomSource& rng);

// Query filter for an AND over `keywords` at `location`: the union of each
// keyword's positions, without blinding.
BitFilter build_and_query(const UserKeyring& agent, std::span<const Token> keywords,
                          const Token& location, const SystemParams& params);

}  // namespace sbf

#endif  // SBF_SECURE_INDEX_H_
