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

#ifndef SBF_SIM_H_
#define SBF_SIM_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sbf/analysis.h"
#include "sbf/params.h"

namespace sbf {

struct ExperimentRow {
  std::string sweep_name;
  double sweep_value = 0;
  std::uint64_t trials = 0;
  double estimate = 0;
  double stderr_ = 0;
  std::optional<double> analytic;
  std::uint64_t seed = 0;
};

// One user's blinding elements against l * gamma keyword layouts, redrawn
// every trial.
struct OverlapConfig {
  std::uint64_t m = 0;
  std::uint32_t r = 0;
  std::uint32_t l = 0;
  std::uint32_t gamma_count = 1;
  std::vector<std::uint32_t> oe_counts;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Row per oe_count: fraction of trials in which some keyword's positions
// are all covered. `analytic` is the chi bound at t = 1.
std::vector<ExperimentRow> run_overlap_experiment(const OverlapConfig& cfg);

// How simulated users load the buffers.
enum class LoadModel {
  // Each (keyword, location) pair owns r fixed positions per trial; users at
  // the same location holding the same keyword hit the same buffers. This is
  // what the real index does.
  kKeywordLayout,
  // Every element lands on r fresh uniform positions.
  kUniform,
};

// How many real keywords d each simulated user holds; the rest of q is
// blinding.
enum class KeywordCountModel {
  kFixedQ,        // d = q
  kUniformOneToQ, // d uniform in [1, q]
};

struct OverflowConfig {
  SystemParams params;
  std::uint32_t users = 0;
  std::vector<std::uint32_t> betas;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  LoadModel model = LoadModel::kKeywordLayout;
  KeywordCountModel keyword_counts = KeywordCountModel::kUniformOneToQ;
  unsigned threads = 0;
};

// Row per beta: fraction of trials whose fullest buffer exceeds beta. Every
// beta is judged on the same simulated loads.
std::vector<ExperimentRow> run_overflow_experiment(const OverflowConfig& cfg);

// Buffer occupancy of one simulated trial.
std::vector<std::uint32_t> simulate_occupancy(const OverflowConfig& cfg, std::uint64_t trial);

// Buffer occupancy after `users` owners build real indexes through the PRF
// stack, with keyword counts drawn like the simulation.
std::vector<std::uint32_t> real_stack_occupancy(const OverflowConfig& cfg, std::uint64_t trial);

struct Crosscheck {
  // Per-trial peak occupancy, simulated vs real: independent samples, so the
  // p-value is meaningful.
  KsResult peaks;
  // Every buffer pooled. Buffers within a trial share one layout and are not
  // independent, so only the statistic is informative.
  KsResult pooled;
};

// Compares the simulation with the real stack over `trials` trials each.
Crosscheck overflow_crosscheck(const OverflowConfig& cfg, std::uint64_t trials);

struct AccuracyConfig {
  SystemParams params;
  std::uint32_t users = 0;
  std::uint32_t negative_probes = 0;  // random (keyword, location) queries
  std::uint64_t seed = 0;
};

struct AccuracyReport {
  std::uint64_t probes = 0;          // (user, keyword, location) triples
  std::uint64_t recalled = 0;
  std::uint64_t queries = 0;         // distinct (keyword, location) searches
  std::uint64_t matches = 0;
  std::uint64_t true_matches = 0;
  std::uint64_t fp_oe_overlap = 0;   // needed a blinding position
  std::uint64_t fp_collision = 0;    // real keyword positions alone sufficed
  std::uint64_t overflowed_users = 0;

  double recall() const { return probes == 0 ? 1.0 : double(recalled) / double(probes); }
  double precision() const { return matches == 0 ? 1.0 : double(true_matches) / double(matches); }
};

// Full stack: setup, register, build, seal, ingest, search.
AccuracyReport run_accuracy_experiment(const AccuracyConfig& cfg);

// "# seed=<seed>" then a header and one line per row.
void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, std::uint64_t seed);
// Human-readable "name=value estimate +- stderr (analytic)" lines.
void write_lines(std::ostream& out, const std::vector<ExperimentRow>& rows);

}  // namespace sbf

#endif  // SBF_SIM_H_
