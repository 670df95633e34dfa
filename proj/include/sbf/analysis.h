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

#ifndef SBF_ANALYSIS_H_
#define SBF_ANALYSIS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sbf/filters.h"
#include "sbf/params.h"

namespace sbf {

// How a closed-form evaluator computes its binomial ratios.
enum class Evaluation {
  kAuto,      // exact below the size threshold, log-gamma above
  kExact,     // GMP big-integer ratios
  kLogGamma,  // long double lgamma
};

// Exact evaluation is used while lambda stays at or below this.
inline constexpr std::uint64_t kExactLambdaLimit = 4096;

// lambda rounded to nearest, as the combinatorial formulas need an integer.
std::uint64_t rounded_lambda(std::uint64_t m, std::uint32_t r, double inserted);

// 1 - sum_{k<r} C(lambda,k) C(m-lambda,lambda-k) / C(m,lambda): two
// lambda-subsets of m positions share at least r positions.
double pr_varpi(std::uint64_t m, std::uint64_t lambda, std::uint32_t r,
                Evaluation how = Evaluation::kAuto);

// q / C(lambda,r) * sum_{k=r}^{lambda} C(lambda,k) C(m-lambda,lambda-k) C(k,r) / C(m,lambda).
double pr_psi(std::uint64_t m, std::uint64_t lambda, std::uint32_t r, std::uint32_t q,
              Evaluation how = Evaluation::kAuto);

struct ChiBound {
  std::uint64_t t = 0;
  std::uint32_t l = 0;
  std::uint32_t gamma_count = 0;
  std::uint32_t r = 0;
  std::uint64_t m = 0;
  std::uint64_t lambda = 0;
  double raw = 0;    // t * C(lambda,r) * l * gamma * r! / m^r
  double bound = 0;  // min(raw, 1)
  bool clamped = false;
};

ChiBound pr_chi_bound(std::uint64_t t, std::uint64_t lambda, std::uint32_t r, std::uint32_t l,
                      std::uint32_t gamma_count, std::uint64_t m);

struct OverlapReport {
  std::uint64_t m = 0;
  std::uint64_t lambda = 0;
  std::uint32_t r = 0;
  std::uint32_t q = 0;
  double pr_varpi = 0;
  double pr_psi = 0;
};

// lambda from q inserted elements, then both overlap probabilities.
OverlapReport overlap_report(const SystemParams& params);

// Upload wire size in bits, before message framing, for the worst case of q
// keywords: zone blob, handle, ciphertext length prefix, sealed meta
// information, compressed filter bound at q*r set bits, transport overhead.
std::uint64_t comm_overhead_upload(const SystemParams& params, std::uint64_t pk_overhead_bits,
                                   std::uint64_t sym_overhead_bits);
// Same, with the overheads of the primitives this library uses.
std::uint64_t comm_overhead_upload(const SystemParams& params);

// Bits spent around the records of a search response: correlation byte,
// record count, per-record handle and length, transport overhead and the
// frame header.
std::uint64_t result_framing_bits(std::uint64_t matches);
// matches * sealed_bits + result_framing_bits(matches).
std::uint64_t comm_overhead_result(std::uint64_t matches, std::uint64_t sealed_bits);

// m * beta * tau / 8 bytes.
double memory_model(const SystemParams& params);

struct McEstimate {
  double estimate = 0;
  double stderr_ = 0;
  std::uint64_t trials = 0;
};

// Fraction of trials in which `oe_count` blinding elements of r uniform
// positions each fully cover at least one of the fixed keyword position sets.
McEstimate oracle_overlap_mc(std::uint64_t m, std::uint32_t r, std::uint32_t oe_count,
                             std::span<const PositionSet> keyword_layout, std::uint64_t trials,
                             std::uint64_t seed);

struct KsResult {
  double statistic = 0;
  double p_value = 1;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic distribution and
// the effective-size correction for small samples.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace sbf

#endif  // SBF_ANALYSIS_H_
