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

#include "sbf/net.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sodium.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>

namespace sbf {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'B', 'F', '1'};
constexpr std::string_view kTranscriptLabel = "sbfstore handshake v1";

}  // namespace

bool is_known_type(std::uint8_t type) {
  return (type >= 0x01 && type <= 0x08) || type == 0x10 || type == 0x11;
}

Bytes encode_frame(std::uint8_t type, ByteView payload) {
  if (payload.size() > kMaxFramePayload) throw InvalidArgument("frame payload too large");
  ByteWriter w;
  w.raw(kMagic);
  w.u8(type);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return std::move(w).take();
}

void FrameDecoder::feed(ByteView bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<Frame> FrameDecoder::next() {
  const std::size_t have_magic = std::min(buf_.size(), kMagic.size());
  if (!std::equal(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(have_magic), kMagic.begin())) {
    throw FormatError("bad frame magic");
  }
  if (buf_.size() < kFrameHeaderBytes) return std::nullopt;
  ByteReader r(ByteView(buf_).subspan(4, 5));
  Frame f;
  f.type = r.u8();
  const std::uint32_t len = r.u32();
  if (len > kMaxFramePayload) throw FormatError("frame payload exceeds the limit");
  if (buf_.size() < kFrameHeaderBytes + len) return std::nullopt;
  f.payload.assign(buf_.begin() + kFrameHeaderBytes, buf_.begin() + kFrameHeaderBytes + len);
  buf_.erase(buf_.begin(), buf_.begin() + kFrameHeaderBytes + len);
  return f;
}

std::string error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadFrame: return "BAD_FRAME";
    case ErrorCode::kUnknownType: return "UNKNOWN_TYPE";
    case ErrorCode::kMalformed: return "MALFORMED";
    case ErrorCode::kZoneUnknown: return "ZONE_UNKNOWN";
    case ErrorCode::kOverflow: return "OVERFLOW";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kForbidden: return "FORBIDDEN";
    case ErrorCode::kInvalid: return "INVALID";
    case ErrorCode::kInternal: return "INTERNAL";
    case ErrorCode::kHandshake: return "HANDSHAKE";
    case ErrorCode::kTransport: return "TRANSPORT";
  }
  return "CODE_" + std::to_string(static_cast<int>(code));
}

Bytes encode_error(ErrorCode code, const std::string& message) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(code));
  w.raw(as_bytes(message));
  return std::move(w).take();
}

std::pair<ErrorCode, std::string> decode_error(ByteView payload) {
  ByteReader r(payload);
  const auto code = static_cast<ErrorCode>(r.u16());
  ByteView rest = r.rest();
  return {code, std::string(rest.begin(), rest.end())};
}

// ---------------------------------------------------------------------------
// Bodies
// ---------------------------------------------------------------------------

Bytes encode_search_loc(const Token& zone, const PositionSet& ps) {
  ByteWriter w;
  w.blob8(zone);
  w.u32(static_cast<std::uint32_t>(ps.positions.size()));
  for (auto p : ps.positions) w.u64(p);
  return std::move(w).take();
}

std::pair<Token, PositionSet> decode_search_loc(ByteView payload, const SystemParams& params) {
  ByteReader r(payload);
  Token zone = r.blob8();
  const std::uint32_t n = r.u32();
  if (n == 0 || n != params.r) throw FormatError("search must address exactly r positions");
  PositionSet ps;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint64_t p = r.u64();
    if (p >= params.m) throw FormatError("search position out of range");
    ps.positions.push_back(p);
  }
  r.expect_end("location search");
  return {std::move(zone), std::move(ps)};
}

Bytes encode_search_bf(const Token& zone, const BitFilter& query) {
  ByteWriter w;
  w.blob8(zone);
  w.raw(compress_filter(query));
  return std::move(w).take();
}

std::pair<Token, BitFilter> decode_search_bf(ByteView payload, const SystemParams& params) {
  ByteReader r(payload);
  Token zone = r.blob8();
  BitFilter bf = decompress_filter(r.rest(), params.m);
  return {std::move(zone), std::move(bf)};
}

Bytes encode_result(const std::vector<SealedRecord>& records) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    w.raw(rec.handle);
    w.blob16(rec.ciphertext);
  }
  return std::move(w).take();
}

std::vector<SealedRecord> decode_result(ByteView payload) {
  ByteReader r(payload);
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / (kHandleBytes + 2)) throw FormatError("result count exceeds payload");
  std::vector<SealedRecord> out(n);
  for (auto& rec : out) {
    rec.handle = r.array<kHandleBytes>();
    rec.ciphertext = r.blob16();
  }
  r.expect_end("search result");
  return out;
}

Bytes encode_remove_ack(const RemoveAck& ack) {
  ByteWriter w;
  w.u64(ack.pruned);
  w.u8(ack.dropped ? 1 : 0);
  w.u64(ack.replacement_buffers);
  w.u32(ack.warnings);
  return std::move(w).take();
}

RemoveAck decode_remove_ack(ByteView payload) {
  ByteReader r(payload);
  RemoveAck ack;
  ack.pruned = r.u64();
  const std::uint8_t dropped = r.u8();
  if (dropped > 1) throw FormatError("remove ack: bad flag");
  ack.dropped = dropped == 1;
  ack.replacement_buffers = r.u64();
  ack.warnings = r.u32();
  r.expect_end("remove ack");
  return ack;
}

// ---------------------------------------------------------------------------
// Handshake
// ---------------------------------------------------------------------------

namespace {

Role parse_role(std::uint8_t v) {
  if (v != static_cast<std::uint8_t>(Role::kOwner) && v != static_cast<std::uint8_t>(Role::kAgent)) {
    throw FormatError("unknown role");
  }
  return static_cast<Role>(v);
}

}  // namespace

Bytes Hello::encode() const {
  ByteWriter w;
  w.u8(version);
  w.u8(static_cast<std::uint8_t>(role));
  w.raw(public_key);
  w.raw(nonce);
  return std::move(w).take();
}

Hello Hello::decode(ByteView payload) {
  ByteReader r(payload);
  Hello h;
  h.version = r.u8();
  h.role = parse_role(r.u8());
  h.public_key = r.array<32>();
  h.nonce = r.array<16>();
  r.expect_end("hello");
  return h;
}

Bytes HelloAck::encode() const {
  ByteWriter w;
  w.u8(version);
  w.u8(static_cast<std::uint8_t>(role));
  w.raw(public_key);
  w.raw(nonce);
  w.raw(confirm);
  return std::move(w).take();
}

HelloAck HelloAck::decode(ByteView payload) {
  ByteReader r(payload);
  HelloAck a;
  a.version = r.u8();
  a.role = parse_role(r.u8());
  a.public_key = r.array<32>();
  a.nonce = r.array<16>();
  a.confirm = r.array<32>();
  r.expect_end("hello ack");
  return a;
}

HandshakeKeys derive_handshake_keys(const std::array<std::uint8_t, 32>& own_secret,
                                    const std::array<std::uint8_t, 32>& peer_public,
                                    const Hello& hello, const HelloAck& ack) {
  ensure_sodium();
  std::array<std::uint8_t, 32> shared{};
  if (crypto_scalarmult(shared.data(), own_secret.data(), peer_public.data()) != 0) {
    throw CryptoError("key agreement failed");
  }
  ByteWriter t;
  t.raw(as_bytes(kTranscriptLabel));
  t.raw(hello.encode());
  t.u8(ack.version);
  t.u8(static_cast<std::uint8_t>(ack.role));
  t.raw(ack.public_key);
  t.raw(ack.nonce);
  const Bytes transcript = std::move(t).take();
  std::array<std::uint8_t, 32> th{};
  crypto_hash_sha256(th.data(), transcript.data(), transcript.size());

  auto kdf = [&](std::string_view label) {
    std::array<std::uint8_t, 32> out{};
    Bytes msg(label.begin(), label.end());
    msg.insert(msg.end(), th.begin(), th.end());
    crypto_generichash(out.data(), out.size(), msg.data(), msg.size(), shared.data(), shared.size());
    return out;
  };
  HandshakeKeys keys;
  keys.session.bytes = kdf("session");
  keys.confirm = kdf("server confirm");
  sodium_memzero(shared.data(), shared.size());
  return keys;
}

// ---------------------------------------------------------------------------
// Socket helpers
// ---------------------------------------------------------------------------

namespace {

void send_all(int fd, ByteView bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Reads until the decoder yields a frame. Returns nullopt on orderly close.
std::optional<Frame> recv_frame(int fd, FrameDecoder& dec) {
  std::uint8_t buf[16384];
  for (;;) {
    if (auto f = dec.next()) return f;
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv failed: ") + std::strerror(errno));
    }
    dec.feed(ByteView(buf, static_cast<std::size_t>(n)));
  }
}

Bytes typed_payload(std::uint8_t correlation, const TransportEnvelope& env) {
  Bytes out{correlation};
  Bytes e = env.encode();
  out.insert(out.end(), e.begin(), e.end());
  return out;
}

struct ErrorReply {
  ErrorCode code;
  std::string message;
};

}  // namespace

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

Server::Server(SystemParams params, std::shared_ptr<ZoneRegistry> zones)
    : params_(params), zones_(std::move(zones)) {
  validate(params_);
  if (!zones_) throw InvalidArgument("server needs a zone registry");
}

Server::~Server() { stop(); }

void Server::start(const std::string& host, std::uint16_t port) {
  if (running_) throw Error("server already running");
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError(std::string("cannot resolve ") + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 128) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot listen on " + host + ":" + service);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  listen_fd_ = fd;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<Worker> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
}

void Server::wait() {
  while (running_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

ServerStats Server::stats() const { return {sessions_.load(), requests_.load(), errors_.load()}; }

void Server::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      if (!running_) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      continue;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    reap_finished();
    open_fds_.push_back(fd);
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, fd, done] {
                          serve_connection(fd);
                          *done = true;
                        }),
                        done});
  }
}

// Caller holds mu_.
void Server::reap_finished() {
  auto it = std::partition(workers_.begin(), workers_.end(), [](const Worker& w) { return !*w.done; });
  for (auto j = it; j != workers_.end(); ++j) j->thread.join();
  workers_.erase(it, workers_.end());
}

Bytes Server::handle(Role role, std::uint8_t type, ByteView body, std::uint8_t& reply_type) {
  auto require = [&](Role want) {
    if (role != want) {
      throw ErrorReply{ErrorCode::kForbidden,
                       want == Role::kOwner ? "only data owners may modify the index"
                                            : "only agents may search"};
    }
  };
  auto require_zone = [&](const Token& zone) {
    if (!zones_->contains(zone)) throw ErrorReply{ErrorCode::kZoneUnknown, "zone " + to_hex(zone)};
  };

  switch (static_cast<MsgType>(type)) {
    case MsgType::kUpload: {
      require(Role::kOwner);
      UploadPacket pkt = UploadPacket::decode(body, params_);
      require_zone(pkt.zone);
      const std::uint64_t written =
          zones_->write(pkt.zone, [&](StorageBloomFilter& s) { return s.ingest(pkt); });
      reply_type = static_cast<std::uint8_t>(MsgType::kUploadAck);
      ByteWriter w;
      w.u64(written);
      return std::move(w).take();
    }
    case MsgType::kSearchLoc: {
      require(Role::kAgent);
      auto [zone, ps] = decode_search_loc(body, params_);
      require_zone(zone);
      auto result = zones_->read(zone, [&](const StorageBloomFilter& s) { return s.search_location(ps); });
      reply_type = static_cast<std::uint8_t>(MsgType::kResult);
      return encode_result(result.matches);
    }
    case MsgType::kSearchBf: {
      require(Role::kAgent);
      auto [zone, bf] = decode_search_bf(body, params_);
      require_zone(zone);
      auto result = zones_->read(zone, [&](const StorageBloomFilter& s) { return s.search_filter(bf); });
      reply_type = static_cast<std::uint8_t>(MsgType::kResult);
      return encode_result(result.matches);
    }
    case MsgType::kRemove: {
      require(Role::kOwner);
      RemovalRequest req = RemovalRequest::decode(body, params_);
      require_zone(req.zone);
      RemoveOutcome out = zones_->write(req.zone, [&](StorageBloomFilter& s) { return s.remove(req); });
      reply_type = static_cast<std::uint8_t>(MsgType::kRemoveAck);
      return encode_remove_ack({out.pruned, out.dropped, out.replacement_buffers,
                                static_cast<std::uint32_t>(out.warnings.size())});
    }
    default:
      throw ErrorReply{ErrorCode::kUnknownType, "type " + std::to_string(type)};
  }
}

void Server::serve_connection(int fd) {
  ++sessions_;
  FrameDecoder dec;
  std::optional<Role> role;
  std::unique_ptr<TransportSealer> sealer;
  std::unique_ptr<TransportOpener> opener;
  auto rng = RandomSource::system();

  auto send_plain_error = [&](ErrorCode code, const std::string& msg) {
    ++errors_;
    try {
      send_all(fd, encode_frame(static_cast<std::uint8_t>(MsgType::kError), encode_error(code, msg)));
    } catch (const Error&) {
    }
  };

  try {
    for (;;) {
      std::optional<Frame> frame;
      try {
        frame = recv_frame(fd, dec);
      } catch (const FormatError& e) {
        send_plain_error(ErrorCode::kBadFrame, e.what());
        break;
      }
      if (!frame) break;
      ++requests_;

      if (!role) {
        if (frame->type != static_cast<std::uint8_t>(MsgType::kHello)) {
          send_plain_error(ErrorCode::kHandshake, "handshake required");
          break;
        }
        Hello hello;
        try {
          hello = Hello::decode(frame->payload);
        } catch (const FormatError& e) {
          send_plain_error(ErrorCode::kHandshake, e.what());
          break;
        }
        if (hello.version != kProtocolVersion) {
          send_plain_error(ErrorCode::kHandshake, "unsupported protocol version");
          break;
        }
        std::array<std::uint8_t, 32> secret = rng.array<32>();
        HelloAck ack;
        ack.role = hello.role;
        crypto_scalarmult_base(ack.public_key.data(), secret.data());
        ack.nonce = rng.array<16>();
        HandshakeKeys keys;
        try {
          keys = derive_handshake_keys(secret, hello.public_key, hello, ack);
        } catch (const CryptoError& e) {
          send_plain_error(ErrorCode::kHandshake, e.what());
          break;
        }
        sodium_memzero(secret.data(), secret.size());
        ack.confirm = keys.confirm;
        send_all(fd, encode_frame(static_cast<std::uint8_t>(MsgType::kHelloAck), ack.encode()));
        sealer = std::make_unique<TransportSealer>(keys.session, kServerToClient);
        opener = std::make_unique<TransportOpener>(keys.session, kClientToServer);
        role = hello.role;
        continue;
      }

      std::uint8_t correlation = 0;
      std::uint8_t reply_type = static_cast<std::uint8_t>(MsgType::kError);
      Bytes reply;
      try {
        if (frame->payload.empty()) throw ErrorReply{ErrorCode::kMalformed, "missing correlation byte"};
        correlation = frame->payload[0];
        Bytes body;
        try {
          body = opener->unwrap(TransportEnvelope::decode(ByteView(frame->payload).subspan(1)));
        } catch (const Error& e) {
          throw ErrorReply{ErrorCode::kTransport, e.what()};
        }
        reply = handle(*role, frame->type, body, reply_type);
      } catch (const ErrorReply& e) {
        reply = encode_error(e.code, e.message);
      } catch (const CapacityError& e) {
        reply = encode_error(ErrorCode::kOverflow, e.what());
      } catch (const FormatError& e) {
        reply = encode_error(ErrorCode::kMalformed, e.what());
      } catch (const NotFound& e) {
        reply = encode_error(ErrorCode::kNotFound, e.what());
      } catch (const InvalidArgument& e) {
        reply = encode_error(ErrorCode::kInvalid, e.what());
      } catch (const std::exception& e) {
        reply = encode_error(ErrorCode::kInternal, e.what());
      }
      if (reply_type == static_cast<std::uint8_t>(MsgType::kError)) ++errors_;
      send_all(fd, encode_frame(reply_type, typed_payload(correlation, sealer->wrap(reply))));
    }
  } catch (const std::exception&) {
    // Connection-level failure; drop the session.
  }
  std::lock_guard lock(mu_);
  open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
  ::close(fd);
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

Client Client::connect(const std::string& host, std::uint16_t port, Role role,
                       const SystemParams& params, RandomSource& rng) {
  ensure_sodium();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  Client c;
  c.fd_ = fd;
  c.params_ = params;

  std::array<std::uint8_t, 32> secret = rng.array<32>();
  Hello hello;
  hello.role = role;
  crypto_scalarmult_base(hello.public_key.data(), secret.data());
  hello.nonce = rng.array<16>();
  c.write_all(encode_frame(static_cast<std::uint8_t>(MsgType::kHello), hello.encode()));
  Frame reply = c.read_frame();
  if (reply.type == static_cast<std::uint8_t>(MsgType::kError)) {
    auto [code, msg] = decode_error(reply.payload);
    throw ServerError(code, msg);
  }
  if (reply.type != static_cast<std::uint8_t>(MsgType::kHelloAck)) {
    throw TransportError("unexpected handshake reply");
  }
  HelloAck ack;
  try {
    ack = HelloAck::decode(reply.payload);
  } catch (const FormatError& e) {
    throw TransportError(std::string("bad handshake reply: ") + e.what());
  }
  if (ack.version != kProtocolVersion || ack.role != role) {
    throw TransportError("handshake version or role mismatch");
  }
  HandshakeKeys keys;
  try {
    keys = derive_handshake_keys(secret, ack.public_key, hello, ack);
  } catch (const CryptoError& e) {
    throw TransportError(e.what());
  }
  sodium_memzero(secret.data(), secret.size());
  if (sodium_memcmp(keys.confirm.data(), ack.confirm.data(), keys.confirm.size()) != 0) {
    throw TransportError("handshake transcript does not verify");
  }
  c.key_ = keys.session;
  c.sealer_ = std::make_unique<TransportSealer>(keys.session, kClientToServer);
  c.opener_ = std::make_unique<TransportOpener>(keys.session, kServerToClient);
  return c;
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

Client::Client(Client&& other) noexcept { *this = std::move(other); }

Client& Client::operator=(Client&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    params_ = other.params_;
    key_ = other.key_;
    sealer_ = std::move(other.sealer_);
    opener_ = std::move(other.opener_);
    decoder_ = std::move(other.decoder_);
    correlation_ = other.correlation_;
    last_request_bytes_ = other.last_request_bytes_;
    last_response_bytes_ = other.last_response_bytes_;
  }
  return *this;
}

void Client::write_all(ByteView bytes) { send_all(fd_, bytes); }

Frame Client::read_frame() {
  std::optional<Frame> f;
  try {
    f = recv_frame(fd_, decoder_);
  } catch (const FormatError& e) {
    throw TransportError(std::string("bad frame from server: ") + e.what());
  }
  if (!f) throw TransportError("server closed the connection");
  last_response_bytes_ = kFrameHeaderBytes + f->payload.size();
  return *f;
}

Frame Client::raw_roundtrip(ByteView bytes) {
  write_all(bytes);
  return read_frame();
}

Frame Client::roundtrip(std::uint8_t type, ByteView body) {
  const std::uint8_t corr = ++correlation_;
  Bytes frame = encode_frame(type, typed_payload(corr, sealer_->wrap(body)));
  last_request_bytes_ = frame.size();
  write_all(frame);
  Frame reply = read_frame();
  const bool is_error = reply.type == static_cast<std::uint8_t>(MsgType::kError);
  Frame out;
  out.type = reply.type;
  try {
    if (reply.payload.empty()) throw TransportError("reply without correlation byte");
    if (reply.payload[0] != corr) throw TransportError("reply correlation mismatch");
    out.payload = opener_->unwrap(TransportEnvelope::decode(ByteView(reply.payload).subspan(1)));
  } catch (const Error& e) {
    // Connection-level errors are sent in the clear before the server closes.
    if (is_error) {
      try {
        auto [code, msg] = decode_error(reply.payload);
        throw ServerError(code, msg);
      } catch (const FormatError&) {
      }
    }
    throw TransportError(std::string("reply does not authenticate: ") + e.what());
  }
  return out;
}

Bytes Client::expect(std::uint8_t type, ByteView body, MsgType want) {
  Frame reply = roundtrip(type, body);
  if (reply.type == static_cast<std::uint8_t>(MsgType::kError)) {
    try {
      auto [code, msg] = decode_error(reply.payload);
      throw ServerError(code, msg);
    } catch (const FormatError&) {
      throw TransportError("malformed error reply");
    }
  }
  if (reply.type != static_cast<std::uint8_t>(want)) throw TransportError("unexpected reply type");
  return std::move(reply.payload);
}

std::uint64_t Client::upload(const UploadPacket& packet) {
  Bytes reply = expect(static_cast<std::uint8_t>(MsgType::kUpload), packet.encode(), MsgType::kUploadAck);
  ByteReader r(reply);
  const std::uint64_t written = r.u64();
  r.expect_end("upload ack");
  return written;
}

std::vector<SealedRecord> Client::search_location(const Token& zone, const PositionSet& ps) {
  return decode_result(expect(static_cast<std::uint8_t>(MsgType::kSearchLoc),
                              encode_search_loc(zone, ps), MsgType::kResult));
}

std::vector<SealedRecord> Client::search_filter(const Token& zone, const BitFilter& query) {
  return decode_result(expect(static_cast<std::uint8_t>(MsgType::kSearchBf),
                              encode_search_bf(zone, query), MsgType::kResult));
}

RemoveAck Client::remove(const RemovalRequest& request) {
  return decode_remove_ack(
      expect(static_cast<std::uint8_t>(MsgType::kRemove), request.encode(), MsgType::kRemoveAck));
}

}  // namespace sbf
