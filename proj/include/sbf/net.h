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

#ifndef SBF_NET_H_
#define SBF_NET_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sbf/bytes.h"
#include "sbf/crypto_envelope.h"
#include "sbf/errors.h"
#include "sbf/params.h"
#include "sbf/random.h"
#include "sbf/sbf_store.h"
#include "sbf/secure_index.h"

namespace sbf {

// ---------------------------------------------------------------------------
// Frames: "SBF1" || u8 type || be32 payload length || payload
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFrameHeaderBytes = 9;
inline constexpr std::uint32_t kMaxFramePayload = 16u << 20;
inline constexpr std::uint8_t kProtocolVersion = 1;

enum class MsgType : std::uint8_t {
  kUpload = 0x01,
  kUploadAck = 0x02,
  kSearchLoc = 0x03,
  kSearchBf = 0x04,
  kResult = 0x05,
  kRemove = 0x06,
  kRemoveAck = 0x07,
  kError = 0x08,
  kHello = 0x10,
  kHelloAck = 0x11,
};

bool is_known_type(std::uint8_t type);

struct Frame {
  std::uint8_t type = 0;
  Bytes payload;
};

Bytes encode_frame(std::uint8_t type, ByteView payload);

// Incremental decoder for a byte stream. Throws FormatError on a bad magic or
// an oversize length; the stream cannot be resynchronised after. Unknown
// types are passed through so the receiver can answer them.
class FrameDecoder {
 public:
  void feed(ByteView bytes);
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size(); }

 private:
  Bytes buf_;
};

enum class ErrorCode : std::uint16_t {
  kBadFrame = 1,
  kUnknownType = 2,
  kMalformed = 3,
  kZoneUnknown = 4,
  kOverflow = 5,
  kNotFound = 6,
  kForbidden = 7,
  kInvalid = 8,
  kInternal = 9,
  kHandshake = 10,
  kTransport = 11,
};

std::string error_code_name(ErrorCode code);

// be16 code || UTF-8 message
Bytes encode_error(ErrorCode code, const std::string& message);
std::pair<ErrorCode, std::string> decode_error(ByteView payload);

// Raised by the client when the server answers with an ERROR frame.
class ServerError : public Error {
 public:
  ServerError(ErrorCode code, const std::string& message)
      : Error(error_code_name(code) + ": " + message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised for connection, framing and channel failures.
class TransportError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Message bodies (inside the transport envelope)
// ---------------------------------------------------------------------------

// blob8 zone || be32 count || be64 positions
Bytes encode_search_loc(const Token& zone, const PositionSet& ps);
std::pair<Token, PositionSet> decode_search_loc(ByteView payload, const SystemParams& params);

// blob8 zone || compressed filter
Bytes encode_search_bf(const Token& zone, const BitFilter& query);
std::pair<Token, BitFilter> decode_search_bf(ByteView payload, const SystemParams& params);

// be32 count || (handle || blob16 ciphertext) per record
Bytes encode_result(const std::vector<SealedRecord>& records);
std::vector<SealedRecord> decode_result(ByteView payload);

struct RemoveAck {
  std::uint64_t pruned = 0;
  bool dropped = false;
  std::uint64_t replacement_buffers = 0;
  std::uint32_t warnings = 0;
};
Bytes encode_remove_ack(const RemoveAck& ack);
RemoveAck decode_remove_ack(ByteView payload);

// ---------------------------------------------------------------------------
// Handshake
// ---------------------------------------------------------------------------

enum class Role : std::uint8_t { kOwner = 1, kAgent = 2 };

// Direction tags for counter nonces.
inline constexpr std::uint32_t kClientToServer = 1;
inline constexpr std::uint32_t kServerToClient = 2;

// Client side: u8 version || u8 role || 32 B ephemeral key || 16 B nonce.
struct Hello {
  std::uint8_t version = kProtocolVersion;
  Role role = Role::kOwner;
  std::array<std::uint8_t, 32> public_key{};
  std::array<std::uint8_t, 16> nonce{};
  Bytes encode() const;
  static Hello decode(ByteView payload);
};

// Server side: u8 version || u8 role echo || 32 B key || 16 B nonce || 32 B
// confirmation tag over the transcript.
struct HelloAck {
  std::uint8_t version = kProtocolVersion;
  Role role = Role::kOwner;
  std::array<std::uint8_t, 32> public_key{};
  std::array<std::uint8_t, 16> nonce{};
  std::array<std::uint8_t, 32> confirm{};
  Bytes encode() const;
  static HelloAck decode(ByteView payload);
};

struct HandshakeKeys {
  ChannelKey session;
  std::array<std::uint8_t, 32> confirm{};  // expected server tag
};

// X25519 agreement, then BLAKE2b keyed by the shared secret over the
// transcript hash. Throws CryptoError on a degenerate peer key.
HandshakeKeys derive_handshake_keys(const std::array<std::uint8_t, 32>& own_secret,
                                    const std::array<std::uint8_t, 32>& peer_public,
                                    const Hello& hello, const HelloAck& ack_without_tag);

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ServerStats {
  std::uint64_t sessions = 0;
  std::uint64_t requests = 0;
  std::uint64_t errors = 0;
};

// Thread-per-connection server over a zone registry. Holds no agent secret.
class Server {
 public:
  Server(SystemParams params, std::shared_ptr<ZoneRegistry> zones);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting. Port 0 picks a free port.
  void start(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  // Stops accepting, closes open sessions and joins their threads.
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

  ServerStats stats() const;

 private:
  void accept_loop();
  void serve_connection(int fd);
  void reap_finished();
  Bytes handle(Role role, std::uint8_t type, ByteView body, std::uint8_t& reply_type);

  SystemParams params_;
  std::shared_ptr<ZoneRegistry> zones_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::vector<Worker> workers_;
  std::vector<int> open_fds_;
  std::atomic<std::uint64_t> sessions_{0}, requests_{0}, errors_{0};
};

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

// One synchronous session. Every call is one request frame and one response
// frame.
class Client {
 public:
  static Client connect(const std::string& host, std::uint16_t port, Role role,
                        const SystemParams& params, RandomSource& rng);
  ~Client();
  Client(Client&& other) noexcept;
  Client& operator=(Client&& other) noexcept;
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  std::uint64_t upload(const UploadPacket& packet);
  std::vector<SealedRecord> search_location(const Token& zone, const PositionSet& ps);
  std::vector<SealedRecord> search_filter(const Token& zone, const BitFilter& query);
  RemoveAck remove(const RemovalRequest& request);

  // Sends an arbitrary typed body; returns the raw reply. For tests.
  Frame roundtrip(std::uint8_t type, ByteView body);
  // Writes raw bytes to the socket and reads one frame back. For tests.
  Frame raw_roundtrip(ByteView bytes);

  const ChannelKey& session_key() const { return key_; }
  // Frame bytes of the most recent request and response, headers included.
  std::size_t last_request_bytes() const { return last_request_bytes_; }
  std::size_t last_response_bytes() const { return last_response_bytes_; }

 private:
  Client() = default;
  Frame read_frame();
  void write_all(ByteView bytes);
  Bytes expect(std::uint8_t type, ByteView body, MsgType want);

  int fd_ = -1;
  SystemParams params_;
  ChannelKey key_;
  std::unique_ptr<TransportSealer> sealer_;
  std::unique_ptr<TransportOpener> opener_;
  FrameDecoder decoder_;
  std::uint8_t correlation_ = 0;
  std::size_t last_request_bytes_ = 0;
  std::size_t last_response_bytes_ = 0;
};

}  // namespace sbf

#endif  // SBF_NET_H_
