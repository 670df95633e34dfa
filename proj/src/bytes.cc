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

#include "sbf/bytes.h"

#include <algorithm>
#include <cctype>
#include <string>

#include "sbf/errors.h"

namespace sbf {

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.front()))) hex.remove_prefix(1);
  while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.back()))) hex.remove_suffix(1);
  if (hex.size() % 2 != 0) throw FormatError("hex string has odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw FormatError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

void ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::blob8(ByteView bytes) {
  if (bytes.size() > 0xff) throw InvalidArgument("blob too large for 8-bit length prefix");
  u8(static_cast<std::uint8_t>(bytes.size()));
  raw(bytes);
}

void ByteWriter::blob16(ByteView bytes) {
  if (bytes.size() > 0xffff) throw InvalidArgument("blob too large for 16-bit length prefix");
  u16(static_cast<std::uint16_t>(bytes.size()));
  raw(bytes);
}

void ByteWriter::blob32(ByteView bytes) {
  if (bytes.size() > 0xffffffffULL) throw InvalidArgument("blob too large for 32-bit length prefix");
  u32(static_cast<std::uint32_t>(bytes.size()));
  raw(bytes);
}

ByteView ByteReader::raw(std::size_t n) {
  if (n > remaining()) throw FormatError("truncated input");
  ByteView out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

Bytes ByteReader::copy(std::size_t n) {
  ByteView v = raw(n);
  return Bytes(v.begin(), v.end());
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
  ByteView v = raw(2);
  return static_cast<std::uint16_t>((v[0] << 8) | v[1]);
}

std::uint32_t ByteReader::u32() {
  ByteView v = raw(4);
  std::uint32_t out = 0;
  for (std::uint8_t b : v) out = (out << 8) | b;
  return out;
}

std::uint64_t ByteReader::u64() {
  ByteView v = raw(8);
  std::uint64_t out = 0;
  for (std::uint8_t b : v) out = (out << 8) | b;
  return out;
}

Bytes ByteReader::blob8() { return copy(u8()); }
Bytes ByteReader::blob16() { return copy(u16()); }
Bytes ByteReader::blob32() { return copy(u32()); }

void ByteReader::expect_end(std::string_view what) const {
  if (!done()) throw FormatError(std::string(what) + ": trailing bytes");
}

}  // namespace sbf
