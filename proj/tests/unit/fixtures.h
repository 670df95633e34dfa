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

#ifndef SBF_TESTS_FIXTURES_H_
#define SBF_TESTS_FIXTURES_H_

#include <set>
#include <string>
#include <vector>

#include "sbf/crypto_envelope.h"
#include "sbf/params.h"
#include "sbf/sbf_store.h"
#include "sbf/secure_index.h"

namespace sbf::testing {

inline SystemParams small_params(std::uint32_t l = 20, std::uint32_t r = 4,
                                 std::uint32_t gamma = 2, std::uint32_t q = 6,
                                 std::uint32_t beta = 50) {
  return derive_params(l, r, gamma, q, beta, kDefaultTauBits);
}

inline Token tok(const std::string& text, const SystemParams& p) {
  return make_token(text, p.n_bits);
}

inline std::vector<Token> vocabulary(const SystemParams& p) {
  std::vector<Token> out;
  for (std::uint32_t i = 0; i < p.l; ++i) out.push_back(tok("kw" + std::to_string(i), p));
  return out;
}

inline Token location(std::uint32_t i, const SystemParams& p) {
  return tok("loc" + std::to_string(i), p);
}

inline Token zone(std::uint32_t i, const SystemParams& p) {
  return tok("zone" + std::to_string(i), p);
}

inline MetaInfo meta_for(const std::vector<Token>& keywords, const std::string& who,
                         const SystemParams& p) {
  MetaInfo mi;
  mi.pseudonym = tok("pseudonym:" + who, p);
  mi.server_id = tok("server:" + who, p);
  mi.memory_index = tok("memory:" + who, p);
  mi.health = keywords;
  return mi;
}

struct Owner {
  std::vector<Token> keywords;
  UserKeyring keyring;
  UserIndex index;
  UploadPacket packet;
};

class StoreWorld {
 public:
  explicit StoreWorld(SystemParams params, std::uint64_t seed = 1)
      : p(params), vocab(vocabulary(p)), rng(RandomSource::seeded(seed)) {
    SetupResult s = setup(p, vocab, rng);
    ms = s.secrets;
    agent_keys = s.agent;
    agent = agent_keyring(ms);
  }

  Owner make_owner(std::vector<Token> kws, const Token& loc, std::uint32_t z = 0) {
    Owner o;
    o.keywords = std::move(kws);
    o.keyring = register_user(ms, o.keywords, zone(z, p));
    o.index = build_index(o.keyring, loc, p, rng);
    o.packet = make_upload_packet(o.index, meta_for(o.keywords, "o", p), agent_keys.public_key,
                                  zone(z, p), p, rng);
    return o;
  }

  std::vector<Token> random_keywords(std::size_t d) {
    std::vector<Token> pool = vocab;
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.uniform(i)]);
    pool.resize(d);
    return pool;
  }

  std::set<Handle> handles(const SearchResult& r) {
    std::set<Handle> out;
    for (const auto& rec : r.matches) out.insert(rec.handle);
    return out;
  }

  SystemParams p;
  std::vector<Token> vocab;
  RandomSource rng;
  MasterSecrets ms;
  AgentKeyPair agent_keys;
  UserKeyring agent;
};

}  // namespace sbf::testing

#endif  // SBF_TESTS_FIXTURES_H_
