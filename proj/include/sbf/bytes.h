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

#ifndef SBF_BYTES_H_
#define SBF_BYTES_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sbf {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView bytes);
// Accepts upper or lower case; surrounding whitespace is ignored.
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Big-endian appender.
class ByteWriter {
 public:
  ByteWriter() = default;

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  // Length-prefixed blobs; the prefix width bounds the blob size.
  void blob8(ByteView bytes);
  void blob16(ByteView bytes);
  void blob32(ByteView bytes);

  std::size_t size() const { return out_.size(); }
  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

// Big-endian cursor over a byte view. Every read past the end throws
// FormatError.
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t n);
  Bytes copy(std::size_t n);
  Bytes blob8();
  Bytes blob16();
  Bytes blob32();
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    ByteView v = raw(N);
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  ByteView rest() { return raw(remaining()); }
  bool done() const { return pos_ == in_.size(); }
  // Throws FormatError naming `what` if unread bytes remain.
  void expect_end(std::string_view what) const;

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace sbf

#endif  // SBF_BYTES_H_
