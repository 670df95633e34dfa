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

#include "sbf/analysis.h"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbf/crypto_envelope.h"
#include "sbf/errors.h"
#include "sbf/random.h"

namespace sbf {

namespace {

mpz_class binom(std::uint64_t n, std::uint64_t k) {
  mpz_class out;
  if (k > n) return 0;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return out;
}

long double log_binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -INFINITY;
  const long double nn = static_cast<long double>(n);
  const long double kk = static_cast<long double>(k);
  return std::lgamma(nn + 1) - std::lgamma(kk + 1) - std::lgamma(nn - kk + 1);
}

double to_double(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return c.get_d();
}

bool use_exact(Evaluation how, std::uint64_t lambda) {
  if (how == Evaluation::kExact) return true;
  if (how == Evaluation::kLogGamma) return false;
  return lambda <= kExactLambdaLimit;
}

void check_ranges(std::uint64_t m, std::uint64_t lambda, std::uint32_t r) {
  if (m == 0) throw InvalidArgument("m must be positive");
  if (lambda > m) throw InvalidArgument("lambda exceeds m");
  if (r == 0) throw InvalidArgument("r must be positive");
  if (r > lambda) throw InvalidArgument("r exceeds lambda");
}

}  // namespace

std::uint64_t rounded_lambda(std::uint64_t m, std::uint32_t r, double inserted) {
  return static_cast<std::uint64_t>(std::llround(expected_distinct(m, r, inserted)));
}

double pr_varpi(std::uint64_t m, std::uint64_t lambda, std::uint32_t r, Evaluation how) {
  check_ranges(m, lambda, r);
  if (use_exact(how, lambda)) {
    const mpz_class total = binom(m, lambda);
    mpz_class below = 0;
    for (std::uint64_t k = 0; k < r; ++k) below += binom(lambda, k) * binom(m - lambda, lambda - k);
    return to_double(mpq_class(total - below, total));
  }
  const long double ln_total = log_binom(m, lambda);
  long double below = 0;
  for (std::uint64_t k = 0; k < r; ++k) {
    below += std::exp(log_binom(lambda, k) + log_binom(m - lambda, lambda - k) - ln_total);
  }
  return static_cast<double>(std::clamp<long double>(1 - below, 0, 1));
}

double pr_psi(std::uint64_t m, std::uint64_t lambda, std::uint32_t r, std::uint32_t q,
              Evaluation how) {
  check_ranges(m, lambda, r);
  if (q == 0) throw InvalidArgument("q must be positive");
  if (use_exact(how, lambda)) {
    mpz_class sum = 0;
    for (std::uint64_t k = r; k <= lambda; ++k) {
      sum += binom(lambda, k) * binom(m - lambda, lambda - k) * binom(k, r);
    }
    return to_double(mpq_class(sum * q, binom(lambda, r) * binom(m, lambda)));
  }
  const long double base = -log_binom(m, lambda) - log_binom(lambda, r);
  long double sum = 0;
  for (std::uint64_t k = r; k <= lambda; ++k) {
    sum += std::exp(log_binom(lambda, k) + log_binom(m - lambda, lambda - k) + log_binom(k, r) + base);
  }
  return static_cast<double>(sum * q);
}

ChiBound pr_chi_bound(std::uint64_t t, std::uint64_t lambda, std::uint32_t r, std::uint32_t l,
                      std::uint32_t gamma_count, std::uint64_t m) {
  check_ranges(m, lambda, r);
  ChiBound out{t, l, gamma_count, r, m, lambda};
  mpz_class r_fact;
  mpz_fac_ui(r_fact.get_mpz_t(), r);
  mpz_class m_pow;
  mpz_pow_ui(m_pow.get_mpz_t(), mpz_class(static_cast<unsigned long>(m)).get_mpz_t(), r);
  mpz_class num = mpz_class(static_cast<unsigned long>(t)) * binom(lambda, r) * l * gamma_count * r_fact;
  mpq_class raw(num, m_pow);
  out.raw = to_double(raw);
  out.clamped = raw > 1;
  out.bound = out.clamped ? 1.0 : out.raw;
  return out;
}

OverlapReport overlap_report(const SystemParams& p) {
  OverlapReport rep;
  rep.m = p.m;
  rep.r = p.r;
  rep.q = p.q;
  rep.lambda = rounded_lambda(p.m, p.r, p.q);
  if (rep.lambda >= p.r) {
    rep.pr_varpi = pr_varpi(p.m, rep.lambda, p.r);
    rep.pr_psi = pr_psi(p.m, rep.lambda, p.r, p.q);
  }
  return rep;
}

std::uint64_t comm_overhead_upload(const SystemParams& p, std::uint64_t pk_overhead_bits,
                                   std::uint64_t sym_overhead_bits) {
  const std::uint64_t zone = 8 + p.n_bits;
  const std::uint64_t handle = 8 * kHandleBytes;
  const std::uint64_t ct_prefix = 16;
  const std::uint64_t sealed = meta_info_bits(p.q, p.n_bits) + pk_overhead_bits;
  const std::uint64_t filter = 8 * compressed_size(std::uint64_t{p.q} * p.r, p.m);
  return zone + handle + ct_prefix + sealed + filter + sym_overhead_bits;
}

std::uint64_t comm_overhead_upload(const SystemParams& p) {
  return comm_overhead_upload(p, 8 * kSealOverheadBytes, 8 * kTransportOverheadBytes);
}

std::uint64_t result_framing_bits(std::uint64_t matches) {
  constexpr std::uint64_t kFrameHeaderBits = 8 * 9;  // magic, type, length
  constexpr std::uint64_t kFixedBits = 8 + 32;       // correlation byte, record count
  constexpr std::uint64_t kPerRecordBits = 8 * kHandleBytes + 16;
  return kFrameHeaderBits + kFixedBits + 8 * kTransportOverheadBytes + matches * kPerRecordBits;
}

std::uint64_t comm_overhead_result(std::uint64_t matches, std::uint64_t sealed_bits) {
  return matches * sealed_bits + result_framing_bits(matches);
}

double memory_model(const SystemParams& p) {
  return static_cast<double>(p.m) * static_cast<double>(p.beta) *
         static_cast<double>(p.tau_bits) / 8.0;
}

McEstimate oracle_overlap_mc(std::uint64_t m, std::uint32_t r, std::uint32_t oe_count,
                             std::span<const PositionSet> keyword_layout, std::uint64_t trials,
                             std::uint64_t seed) {
  if (trials == 0) throw InvalidArgument("trials must be positive");
  if (m == 0 || r == 0) throw InvalidArgument("m and r must be positive");
  for (const PositionSet& ps : keyword_layout) {
    for (auto pos : ps.positions) {
      if (pos >= m) throw InvalidArgument("keyword layout position out of range");
    }
  }
  std::vector<std::uint64_t> stamp(m, 0);
  std::uint64_t hits = 0;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t epoch = trial + 1;
    SimRng rng(trial_seed(seed, trial));
    for (std::uint64_t i = 0; i < std::uint64_t{oe_count} * r; ++i) stamp[rng.uniform(m)] = epoch;
    const bool covered = oe_count > 0 &&
        std::any_of(keyword_layout.begin(), keyword_layout.end(), [&](const PositionSet& ps) {
          return std::all_of(ps.positions.begin(), ps.positions.end(),
                             [&](std::uint64_t pos) { return stamp[pos] == epoch; });
        });
    hits += covered ? 1 : 0;
  }
  McEstimate out;
  out.trials = trials;
  out.estimate = static_cast<double>(hits) / static_cast<double>(trials);
  out.stderr_ = std::sqrt(out.estimate * (1 - out.estimate) / static_cast<double>(trials));
  return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult out;
  out.statistic = d;
  const double en = std::sqrt(na * nb / (na + nb));
  const double lam = (en + 0.12 + 0.11 / en) * d;
  if (lam < 0.2) return out;
  double sum = 0, sign = 1;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lam * lam);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum)) break;
    sign = -sign;
  }
  out.p_value = std::clamp(2 * sum, 0.0, 1.0);
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("Spearman needs two equal-length samples of at least two points");
  }
  std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace sbf
