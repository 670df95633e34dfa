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

#ifndef SBF_PARAMS_H_
#define SBF_PARAMS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "sbf/bytes.h"

namespace sbf {

inline constexpr std::uint32_t kDefaultSecurityBits = 256;
inline constexpr std::uint32_t kDefaultTokenBits = 160;
inline constexpr std::uint32_t kDefaultBeta = 50;
inline constexpr std::uint64_t kBitsPerKbit = 1024;
inline constexpr std::uint64_t kDefaultTauBits = 5 * kBitsPerKbit;

// System-wide parameters shared by key generation, clients and the store.
// Immutable once derived.
struct SystemParams {
  std::uint32_t l = 0;            // vocabulary size
  std::uint32_t r = 0;            // hash lanes per keyword
  std::uint32_t gamma_count = 0;  // sub-locations per zone
  std::uint32_t q = 0;            // padded element count per user
  std::uint64_t m = 0;            // filter length
  std::uint32_t s_bits = 0;       // PRF output width
  std::uint32_t n_bits = 0;       // keyword/location token width
  std::uint32_t beta = 0;         // per-buffer capacity
  std::uint64_t tau_bits = 0;     // max serialized record size

  std::size_t s_bytes() const { return s_bits / 8; }
  std::size_t n_bytes() const { return n_bits / 8; }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

// ceil(l * r * gamma_count / ln 2).
std::uint64_t filter_length(std::uint32_t l, std::uint32_t r, std::uint32_t gamma_count);

// Validates every input and derives m. Throws InvalidArgument on zero
// inputs, q > l, s_bits < 128, or widths that are not whole bytes.
SystemParams derive_params(std::uint32_t l, std::uint32_t r, std::uint32_t gamma_count,
                           std::uint32_t q, std::uint32_t beta, std::uint64_t tau_bits,
                           std::uint32_t s_bits = kDefaultSecurityBits,
                           std::uint32_t n_bits = kDefaultTokenBits);

// Returns a copy with m replaced verbatim. Used to reproduce reference
// configurations whose filter length was not rounded up.
SystemParams with_filter_length(SystemParams params, std::uint64_t m);

// Throws InvalidArgument if any invariant of `params` does not hold.
void validate(const SystemParams& params);

// Expected number of distinct set positions after `inserted` elements of r
// lanes each land in an m-position filter: m - m * exp(-r * inserted / m).
double expected_distinct(std::uint64_t m, std::uint32_t r, double inserted);
inline double expected_distinct(const SystemParams& p, double inserted) {
  return expected_distinct(p.m, p.r, inserted);
}

// Parsed `key=value` parameter source. Recognised keys: l, r, gamma, q,
// beta, tau_kbits, s_bits, n_bits, and the optional m override.
struct ParamOverrides {
  std::map<std::string, std::uint64_t> values;

  // Later sources win.
  void merge(const ParamOverrides& other);
  SystemParams resolve() const;
};

ParamOverrides parse_param_text(std::string_view text);
ParamOverrides load_param_file(const std::string& path);

std::string describe(const SystemParams& params);

// Fixed binary block used by every on-disk format: nine big-endian u64
// fields in declaration order. decode_params re-validates.
void encode_params(ByteWriter& w, const SystemParams& params);
SystemParams decode_params(ByteReader& r);

}  // namespace sbf

#endif  // SBF_PARAMS_H_
