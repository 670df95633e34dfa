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

#include <bit>
#include <string>

#include "sbf/crypto_envelope.h"
#include "sbf/errors.h"

namespace sbf {

std::uint32_t position_width(std::uint64_t m) {
  if (m == 0) throw InvalidArgument("filter length must be positive");
  return static_cast<std::uint32_t>(std::bit_width(m - 1));
}

std::size_t compressed_size(std::uint64_t popcount, std::uint64_t m) {
  return 4 + static_cast<std::size_t>((popcount * position_width(m) + 7) / 8);
}

Bytes compress_filter(const BitFilter& filter) {
  const std::uint64_t m = filter.length();
  const std::uint32_t width = position_width(m);
  const std::vector<std::uint64_t> positions = filter.set_positions();
  if (positions.size() > 0xffffffffULL) throw InvalidArgument("filter too dense to encode");

  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(positions.size()));
  Bytes body((positions.size() * width + 7) / 8, 0);
  std::uint64_t bit = 0;
  for (std::uint64_t p : positions) {
    for (std::uint32_t b = width; b-- > 0; ++bit) {
      if ((p >> b) & 1) body[bit / 8] |= static_cast<std::uint8_t>(0x80 >> (bit % 8));
    }
  }
  w.raw(body);
  return std::move(w).take();
}

BitFilter decompress_filter(ByteView bytes, std::uint64_t m) {
  const std::uint32_t width = position_width(m);
  ByteReader r(bytes);
  const std::uint64_t count = r.u32();
  if (count > m) throw FormatError("sparse filter: more positions than filter length");
  const std::uint64_t body_bits = count * width;
  if (r.remaining() != (body_bits + 7) / 8) throw FormatError("sparse filter: length mismatch");
  ByteView body = r.rest();

  BitFilter out(m);
  std::uint64_t bit = 0;
  std::uint64_t previous = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t p = 0;
    for (std::uint32_t b = 0; b < width; ++b, ++bit) {
      p = (p << 1) | ((body[bit / 8] >> (7 - bit % 8)) & 1);
    }
    if (p >= m) throw FormatError("sparse filter: position " + std::to_string(p) + " >= m");
    if (i > 0 && p <= previous) throw FormatError("sparse filter: positions not ascending");
    out.set(p);
    previous = p;
  }
  for (; bit < 8 * body.size(); ++bit) {
    if ((body[bit / 8] >> (7 - bit % 8)) & 1) throw FormatError("sparse filter: padding bits set");
  }
  return out;
}

}  // namespace sbf
