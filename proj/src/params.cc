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

#include "sbf/params.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sbf/errors.h"

namespace sbf {

namespace {

constexpr long double kLn2 = 0.693147180559945309417232121458176568L;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {"l",         "r",      "gamma",  "q", "beta",
                                             "tau_kbits", "s_bits", "n_bits", "m"};
  return keys;
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::uint32_t narrow32(std::uint64_t v, const char* name) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument(std::string(name) + " is out of range");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint64_t filter_length(std::uint32_t l, std::uint32_t r, std::uint32_t gamma_count) {
  long double exact = static_cast<long double>(l) * r * gamma_count / kLn2;
  return static_cast<std::uint64_t>(std::ceil(exact));
}

void validate(const SystemParams& p) {
  if (p.l == 0 || p.r == 0 || p.gamma_count == 0 || p.q == 0) {
    throw InvalidArgument("l, r, gamma and q must be positive");
  }
  if (p.q > p.l) throw InvalidArgument("q must not exceed l");
  if (p.m == 0) throw InvalidArgument("m must be positive");
  if (p.beta == 0) throw InvalidArgument("beta must be positive");
  if (p.tau_bits == 0) throw InvalidArgument("tau must be positive");
  if (p.s_bits < 128 || p.s_bits > 512 || p.s_bits % 8 != 0) {
    throw InvalidArgument("s_bits must be a multiple of 8 in [128, 512]");
  }
  if (p.n_bits == 0 || p.n_bits > 256 || p.n_bits % 8 != 0) {
    throw InvalidArgument("n_bits must be a multiple of 8 in [8, 256]");
  }
  if (p.m > (std::uint64_t{1} << 40)) throw InvalidArgument("m is unreasonably large");
}

SystemParams derive_params(std::uint32_t l, std::uint32_t r, std::uint32_t gamma_count,
                           std::uint32_t q, std::uint32_t beta, std::uint64_t tau_bits,
                           std::uint32_t s_bits, std::uint32_t n_bits) {
  SystemParams p;
  p.l = l;
  p.r = r;
  p.gamma_count = gamma_count;
  p.q = q;
  p.beta = beta;
  p.tau_bits = tau_bits;
  p.s_bits = s_bits;
  p.n_bits = n_bits;
  if (l == 0 || r == 0 || gamma_count == 0) throw InvalidArgument("l, r and gamma must be positive");
  p.m = filter_length(l, r, gamma_count);
  validate(p);
  return p;
}

SystemParams with_filter_length(SystemParams params, std::uint64_t m) {
  params.m = m;
  validate(params);
  return params;
}

double expected_distinct(std::uint64_t m, std::uint32_t r, double inserted) {
  if (inserted < 0) throw InvalidArgument("inserted must be non-negative");
  if (m == 0) throw InvalidArgument("m must be positive");
  const double md = static_cast<double>(m);
  return md - md * std::exp(-static_cast<double>(r) * inserted / md);
}

void ParamOverrides::merge(const ParamOverrides& other) {
  for (const auto& [k, v] : other.values) values[k] = v;
}

SystemParams ParamOverrides::resolve() const {
  auto get = [&](const char* key) -> std::optional<std::uint64_t> {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  auto require = [&](const char* key) {
    auto v = get(key);
    if (!v) throw InvalidArgument(std::string("missing parameter: ") + key);
    return *v;
  };
  const auto l = narrow32(require("l"), "l");
  const auto r = narrow32(require("r"), "r");
  const auto q = narrow32(require("q"), "q");
  const auto gamma = narrow32(get("gamma").value_or(1), "gamma");
  const auto beta = narrow32(get("beta").value_or(kDefaultBeta), "beta");
  const std::uint64_t tau_bits =
      get("tau_kbits") ? *get("tau_kbits") * kBitsPerKbit : kDefaultTauBits;
  const auto s_bits = narrow32(get("s_bits").value_or(kDefaultSecurityBits), "s_bits");
  const auto n_bits = narrow32(get("n_bits").value_or(kDefaultTokenBits), "n_bits");
  SystemParams p = derive_params(l, r, gamma, q, beta, tau_bits, s_bits, n_bits);
  if (auto m = get("m")) p = with_filter_length(p, *m);
  return p;
}

ParamOverrides parse_param_text(std::string_view text) {
  ParamOverrides out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("parameter line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) {
      throw FormatError("parameter line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw FormatError("parameter line " + std::to_string(line_no) + ": '" + key +
                        "' is not a non-negative integer");
    }
    out.values[key] = v;
  }
  return out;
}

ParamOverrides load_param_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open parameter file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_param_text(ss.str());
}

std::string describe(const SystemParams& p) {
  std::ostringstream os;
  os << "l=" << p.l << " r=" << p.r << " gamma=" << p.gamma_count << " q=" << p.q << " m=" << p.m
     << " beta=" << p.beta << " tau_bits=" << p.tau_bits << " s_bits=" << p.s_bits
     << " n_bits=" << p.n_bits;
  return os.str();
}

void encode_params(ByteWriter& w, const SystemParams& p) {
  w.u64(p.l);
  w.u64(p.r);
  w.u64(p.gamma_count);
  w.u64(p.q);
  w.u64(p.m);
  w.u64(p.s_bits);
  w.u64(p.n_bits);
  w.u64(p.beta);
  w.u64(p.tau_bits);
}

SystemParams decode_params(ByteReader& r) {
  auto field = [&](const char* name) {
    const std::uint64_t v = r.u64();
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError(std::string("parameter block: ") + name + " out of range");
    }
    return static_cast<std::uint32_t>(v);
  };
  SystemParams p;
  p.l = field("l");
  p.r = field("r");
  p.gamma_count = field("gamma");
  p.q = field("q");
  p.m = r.u64();
  p.s_bits = field("s_bits");
  p.n_bits = field("n_bits");
  p.beta = field("beta");
  p.tau_bits = r.u64();
  try {
    validate(p);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("parameter block: ") + e.what());
  }
  return p;
}

}  // namespace sbf
