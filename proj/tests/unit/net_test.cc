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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sodium.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "sbf/analysis.h"
#include "sbf/errors.h"
#include "sbf/net.h"

namespace sbf {
namespace {

using testing::location;
using testing::Owner;
using testing::small_params;
using testing::StoreWorld;
using testing::zone;

class NetWorld : public StoreWorld {
 public:
  explicit NetWorld(SystemParams params, std::uint64_t seed = 1, std::uint32_t zones = 1)
      : StoreWorld(params, seed), registry(std::make_shared<ZoneRegistry>()) {
    for (std::uint32_t z = 0; z < zones; ++z) registry->add(StorageBloomFilter(p, zone(z, p)));
    server = std::make_unique<Server>(p, registry);
    server->start("127.0.0.1", 0);
  }
  ~NetWorld() { server->stop(); }

  Client connect(Role role) { return Client::connect("127.0.0.1", server->port(), role, p, rng); }

  std::shared_ptr<ZoneRegistry> registry;
  std::unique_ptr<Server> server;
};

std::set<Handle> handles_of(const std::vector<SealedRecord>& recs) {
  std::set<Handle> out;
  for (const auto& r : recs) out.insert(r.handle);
  return out;
}

ErrorCode server_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const ServerError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no server error raised";
  return ErrorCode::kInternal;
}

TEST(Frames, RoundTripAndIncrementalDecode) {
  Bytes a = encode_frame(0x03, Bytes{1, 2, 3});
  Bytes b = encode_frame(0x05, Bytes{});
  Bytes stream = a;
  stream.insert(stream.end(), b.begin(), b.end());
  FrameDecoder dec;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    dec.feed(ByteView(stream).subspan(i, 1));
    if (i + 1 < a.size()) EXPECT_FALSE(dec.next().has_value());
  }
  auto f1 = dec.next();
  ASSERT_TRUE(f1);
  EXPECT_EQ(f1->type, 0x03);
  EXPECT_EQ(f1->payload, (Bytes{1, 2, 3}));
  auto f2 = dec.next();
  ASSERT_TRUE(f2);
  EXPECT_TRUE(f2->payload.empty());
  EXPECT_EQ(dec.buffered(), 0u);
}

TEST(Frames, RejectsBadMagicAndOversize) {
  FrameDecoder bad;
  bad.feed(Bytes{'X'});
  EXPECT_THROW(bad.next(), FormatError);
  FrameDecoder big;
  big.feed(Bytes{'S', 'B', 'F', '1', 0x01, 0x01, 0x00, 0x00, 0x01});
  EXPECT_THROW(big.next(), FormatError);
}

TEST(Codec, BodiesRoundTrip) {
  SystemParams p = small_params();
  Token z = zone(0, p);
  PositionSet ps{{0, 5, p.m - 1, 7}};
  auto [z1, ps1] = decode_search_loc(encode_search_loc(z, ps), p);
  EXPECT_EQ(z1, z);
  EXPECT_EQ(ps1.positions, ps.positions);
  EXPECT_THROW(decode_search_loc(encode_search_loc(z, PositionSet{{1, 2}}), p), FormatError);
  EXPECT_THROW(decode_search_loc(encode_search_loc(z, PositionSet{{1, 2, 3, p.m}}), p), FormatError);

  BitFilter bf(p.m);
  bf.set(3);
  bf.set(40);
  auto [z2, bf2] = decode_search_bf(encode_search_bf(z, bf), p);
  EXPECT_EQ(bf2, bf);

  std::vector<SealedRecord> recs(2);
  recs[0].handle[0] = 1;
  recs[0].ciphertext = Bytes(90, 7);
  recs[1].handle[15] = 2;
  EXPECT_EQ(decode_result(encode_result(recs)), recs);
  Bytes truncated = encode_result(recs);
  truncated.pop_back();
  EXPECT_THROW(decode_result(truncated), FormatError);

  RemoveAck ack{12, true, 3, 1};
  RemoveAck back = decode_remove_ack(encode_remove_ack(ack));
  EXPECT_EQ(back.pruned, 12u);
  EXPECT_TRUE(back.dropped);
  EXPECT_EQ(back.replacement_buffers, 3u);
  EXPECT_EQ(back.warnings, 1u);

  auto [code, msg] = decode_error(encode_error(ErrorCode::kOverflow, "buffer 7"));
  EXPECT_EQ(code, ErrorCode::kOverflow);
  EXPECT_EQ(msg, "buffer 7");
}

TEST(Handshake, BothSidesDeriveTheSameKeys) {
  RandomSource rng = RandomSource::seeded(3);
  auto cs = rng.array<32>();
  auto ss = rng.array<32>();
  Hello h;
  h.role = Role::kAgent;
  crypto_scalarmult_base(h.public_key.data(), cs.data());
  h.nonce = rng.array<16>();
  HelloAck a;
  a.role = Role::kAgent;
  crypto_scalarmult_base(a.public_key.data(), ss.data());
  a.nonce = rng.array<16>();
  HandshakeKeys client = derive_handshake_keys(cs, a.public_key, h, a);
  HandshakeKeys server = derive_handshake_keys(ss, h.public_key, h, a);
  EXPECT_EQ(client.session, server.session);
  EXPECT_EQ(client.confirm, server.confirm);
  EXPECT_NE(client.session.bytes, client.confirm);

  // Any transcript change moves both keys.
  HelloAck tampered = a;
  tampered.nonce[0] ^= 1;
  HandshakeKeys t = derive_handshake_keys(cs, a.public_key, h, tampered);
  EXPECT_NE(t.session, client.session);
  EXPECT_NE(t.confirm, client.confirm);

  std::array<std::uint8_t, 32> zero{};
  EXPECT_THROW(derive_handshake_keys(cs, zero, h, a), CryptoError);
}

TEST(Handshake, SessionsGetDistinctKeys) {
  NetWorld w(small_params());
  Client a = w.connect(Role::kAgent);
  Client b = w.connect(Role::kAgent);
  EXPECT_NE(a.session_key(), b.session_key());
}

// A man in the middle that rewrites the server's nonce breaks the
// confirmation tag and the client aborts.
TEST(Handshake, ClientAbortsOnTamperedAck) {
  NetWorld w(small_params());
  // Relay on a local port that flips a bit in the HelloAck nonce.
  int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(lfd, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
  const std::uint16_t relay_port = ntohs(addr.sin_port);

  std::thread relay([&] {
    int c = ::accept(lfd, nullptr, nullptr);
    int s = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    sa.sin_port = htons(w.server->port());
    ::connect(s, reinterpret_cast<sockaddr*>(&sa), sizeof sa);
    std::uint8_t buf[4096];
    ssize_t n = ::recv(c, buf, sizeof buf, 0);
    ::send(s, buf, static_cast<std::size_t>(n), 0);
    std::size_t got = 0;
    const std::size_t want = kFrameHeaderBytes + 2 + 32 + 16 + 32;
    while (got < want) {
      n = ::recv(s, buf + got, sizeof buf - got, 0);
      if (n <= 0) break;
      got += static_cast<std::size_t>(n);
    }
    buf[kFrameHeaderBytes + 2 + 32] ^= 0x01;
    ::send(c, buf, got, 0);
    ::close(s);
    ::close(c);
  });
  EXPECT_THROW(Client::connect("127.0.0.1", relay_port, Role::kAgent, w.p, w.rng), TransportError);
  relay.join();
  ::close(lfd);
}

TEST(Handshake, FramesBeforeHelloAreRefused) {
  NetWorld w(small_params());
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = htons(w.server->port());
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa), 0);
  Bytes f = encode_frame(static_cast<std::uint8_t>(MsgType::kSearchLoc), Bytes{0, 1, 2});
  ::send(fd, f.data(), f.size(), 0);
  FrameDecoder dec;
  std::uint8_t buf[512];
  std::optional<Frame> reply;
  while (!reply) {
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    ASSERT_GT(n, 0);
    dec.feed(ByteView(buf, static_cast<std::size_t>(n)));
    reply = dec.next();
  }
  EXPECT_EQ(reply->type, static_cast<std::uint8_t>(MsgType::kError));
  EXPECT_EQ(decode_error(reply->payload).first, ErrorCode::kHandshake);
  EXPECT_EQ(::recv(fd, buf, sizeof buf, 0), 0);  // closed
  ::close(fd);
}

TEST(Loopback, UploadSearchRemove) {
  NetWorld w(small_params(20, 4, 2, 10), 5);
  Token g = location(0, w.p);
  Client owner = w.connect(Role::kOwner);
  Client agent = w.connect(Role::kAgent);

  Owner a = w.make_owner({w.vocab[0], w.vocab[1]}, g);
  Owner b = w.make_owner({w.vocab[0], w.vocab[2]}, g);
  EXPECT_EQ(owner.upload(a.packet), a.packet.filter(w.p).popcount());
  owner.upload(b.packet);

  auto r0 = agent.search_location(zone(0, w.p), keyword_positions(w.agent, w.vocab[0], g));
  EXPECT_EQ(handles_of(r0), (std::set<Handle>{a.packet.sealed.handle, b.packet.sealed.handle}));
  for (const auto& rec : r0) {
    MetaInfo mi = open_record(w.agent_keys, rec, w.p);
    EXPECT_EQ(mi.health.size(), 2u);
  }
  std::vector<Token> both{w.vocab[0], w.vocab[2]};
  auto r1 = agent.search_filter(zone(0, w.p), build_and_query(w.agent, both, g, w.p));
  EXPECT_TRUE(handles_of(r1).count(b.packet.sealed.handle));

  RemovalPlan plan;
  bool planned = false;
  for (int i = 0; i < 20 && !planned; ++i) {
    try {
      plan = build_removal(b.index, b.keyring, w.vocab[0], g, b.packet.sealed.handle, w.p, w.rng);
      planned = true;
    } catch (const Error&) {
    }
  }
  ASSERT_TRUE(planned);
  RemoveAck ack = owner.remove(plan.request);
  EXPECT_EQ(ack.warnings, 0u);
  EXPECT_GT(ack.pruned, 0u);
  auto r2 = agent.search_location(zone(0, w.p), keyword_positions(w.agent, w.vocab[0], g));
  EXPECT_FALSE(handles_of(r2).count(b.packet.sealed.handle));
  auto r3 = agent.search_location(zone(0, w.p), keyword_positions(w.agent, w.vocab[2], g));
  EXPECT_TRUE(handles_of(r3).count(b.packet.sealed.handle));
}

TEST(Loopback, ResultSizeMatchesModel) {
  NetWorld w(small_params(), 6);
  Token g = location(0, w.p);
  Client owner = w.connect(Role::kOwner);
  Client agent = w.connect(Role::kAgent);
  std::vector<Owner> owners;
  for (int i = 0; i < 3; ++i) {
    owners.push_back(w.make_owner({w.vocab[4], w.vocab[static_cast<std::size_t>(5 + i)]}, g));
    owner.upload(owners.back().packet);
  }
  auto recs = agent.search_location(zone(0, w.p), keyword_positions(w.agent, w.vocab[4], g));
  ASSERT_EQ(recs.size(), 3u);
  const std::uint64_t sealed_bits = recs[0].size_bits();
  for (const auto& r : recs) ASSERT_EQ(r.size_bits(), sealed_bits);
  EXPECT_EQ(8 * agent.last_response_bytes(), comm_overhead_result(recs.size(), sealed_bits));
}

TEST(Loopback, ErrorsCarryCodes) {
  NetWorld w(small_params(20, 4, 2, 6, 1), 7);
  Token g = location(0, w.p);
  Client owner = w.connect(Role::kOwner);
  Client agent = w.connect(Role::kAgent);

  PositionSet ps = keyword_positions(w.agent, w.vocab[0], g);
  EXPECT_EQ(server_code([&] { agent.search_location(zone(9, w.p), ps); }), ErrorCode::kZoneUnknown);
  EXPECT_EQ(server_code([&] { owner.search_location(zone(0, w.p), ps); }), ErrorCode::kForbidden);

  Owner a = w.make_owner({w.vocab[0]}, g);
  EXPECT_EQ(server_code([&] { agent.upload(a.packet); }), ErrorCode::kForbidden);
  owner.upload(a.packet);
  // beta = 1: a second record sharing a position overflows and names it.
  Owner b = w.make_owner({w.vocab[0]}, g);
  try {
    owner.upload(b.packet);
    FAIL() << "expected overflow";
  } catch (const ServerError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflow);
    EXPECT_NE(std::string(e.what()).find("buffer"), std::string::npos);
  }
  // The session survives errors.
  EXPECT_EQ(agent.search_location(zone(0, w.p), ps).size(), 1u);

  RemovalRequest bogus;
  bogus.zone = zone(0, w.p);
  bogus.rbf_prime = BitFilter(w.p.m);
  bogus.rbf_prime.set(0);
  bogus.handle[0] = 0xEE;
  EXPECT_EQ(server_code([&] { owner.remove(bogus); }), ErrorCode::kNotFound);

  Frame unknown = agent.roundtrip(0x42, Bytes{1});
  EXPECT_EQ(unknown.type, static_cast<std::uint8_t>(MsgType::kError));
  EXPECT_EQ(decode_error(unknown.payload).first, ErrorCode::kUnknownType);
  Frame reply = agent.roundtrip(static_cast<std::uint8_t>(MsgType::kSearchLoc), Bytes{1, 2});
  EXPECT_EQ(reply.type, static_cast<std::uint8_t>(MsgType::kError));
  EXPECT_EQ(decode_error(reply.payload).first, ErrorCode::kMalformed);
}

// Raw garbage after the handshake: a bad header closes the session with a
// plain error; the server keeps serving others.
TEST(Loopback, GarbageFramesDoNotCrashServer) {
  NetWorld w(small_params(), 9);
  RandomSource fuzz = RandomSource::seeded(99);
  for (int i = 0; i < 30; ++i) {
    Client c = w.connect(Role::kAgent);
    Bytes junk = fuzz.bytes(1 + fuzz.uniform(64));
    if (i % 2 == 0) {
      // Valid header, random typed payload.
      junk = encode_frame(static_cast<std::uint8_t>(1 + fuzz.uniform(8)), junk);
    }
    try {
      Frame f = c.raw_roundtrip(junk);
      EXPECT_EQ(f.type, static_cast<std::uint8_t>(MsgType::kError));
    } catch (const TransportError&) {
    }
  }
  Client ok = w.connect(Role::kAgent);
  EXPECT_TRUE(ok.search_location(zone(0, w.p), keyword_positions(w.agent, w.vocab[0], location(0, w.p))).empty());
  EXPECT_GE(w.server->stats().errors, 30u);
}

TEST(Loopback, ReplayedRequestIsRejected) {
  NetWorld w(small_params(), 10);
  Client agent = w.connect(Role::kAgent);
  PositionSet ps = keyword_positions(w.agent, w.vocab[0], location(0, w.p));
  agent.search_location(zone(0, w.p), ps);
  // A request sealed under counter 0 again is a replay.
  ASSERT_GT(agent.last_request_bytes(), 0u);
  TransportSealer stale(agent.session_key(), kClientToServer);
  Bytes payload{1};
  Bytes env = stale.wrap(encode_search_loc(zone(0, w.p), ps)).encode();
  payload.insert(payload.end(), env.begin(), env.end());
  Frame f = agent.raw_roundtrip(encode_frame(static_cast<std::uint8_t>(MsgType::kSearchLoc), payload));
  EXPECT_EQ(f.type, static_cast<std::uint8_t>(MsgType::kError));
}

TEST(Loopback, HundredConcurrentClients) {
  NetWorld w(small_params(20, 4, 2, 6, 400), 11, 2);
  Token g = location(0, w.p);
  std::vector<Owner> owners;
  for (int i = 0; i < 100; ++i) {
    owners.push_back(w.make_owner({w.vocab[static_cast<std::size_t>(i % 5)]}, g,
                                  static_cast<std::uint32_t>(i % 2)));
  }
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 100; ++i) {
    threads.emplace_back([&, i] {
      try {
        RandomSource rng = RandomSource::seeded(1000 + static_cast<std::uint64_t>(i));
        Client owner = Client::connect("127.0.0.1", w.server->port(), Role::kOwner, w.p, rng);
        owner.upload(owners[static_cast<std::size_t>(i)].packet);
        Client agent = Client::connect("127.0.0.1", w.server->port(), Role::kAgent, w.p, rng);
        auto recs = agent.search_location(
            zone(static_cast<std::uint32_t>(i % 2), w.p),
            keyword_positions(w.agent, w.vocab[static_cast<std::size_t>(i % 5)], g));
        if (!handles_of(recs).count(owners[static_cast<std::size_t>(i)].packet.sealed.handle)) ++failures;
      } catch (const std::exception&) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  std::size_t total = 0;
  for (std::uint32_t z = 0; z < 2; ++z) {
    total += w.registry->read(zone(z, w.p), [](const StorageBloomFilter& s) { return s.record_count(); });
  }
  EXPECT_EQ(total, 100u);
}

}  // namespace
}  // namespace sbf
