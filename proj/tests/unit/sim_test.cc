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

#include <sstream>

#include <gtest/gtest.h>

#include "sbf/analysis.h"
#include "sbf/errors.h"
#include "sbf/sim.h"

namespace sbf {
namespace {

OverlapConfig small_overlap() {
  OverlapConfig cfg;
  cfg.m = 144;
  cfg.r = 3;
  cfg.l = 30;
  cfg.oe_counts = {0, 2, 4, 6, 8, 10};
  cfg.trials = 4000;
  cfg.seed = 17;
  return cfg;
}

TEST(Overlap, ZeroBlindingNeverCovers) {
  OverlapConfig cfg = small_overlap();
  cfg.oe_counts = {0};
  auto rows = run_overlap_experiment(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].estimate, 0.0);
  EXPECT_EQ(rows[0].analytic.value(), 0.0);
}

TEST(Overlap, ReproducibleAndThreadInvariant) {
  OverlapConfig cfg = small_overlap();
  cfg.threads = 1;
  std::ostringstream a, b;
  write_csv(a, run_overlap_experiment(cfg), cfg.seed);
  cfg.threads = 3;
  write_csv(b, run_overlap_experiment(cfg), cfg.seed);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("# seed=17\nsweep_name,sweep_value,trials,estimate,stderr,analytic,seed\n", 0), 0u);
}

TEST(Overlap, MonotoneInBlindingCount) {
  auto rows = run_overlap_experiment(small_overlap());
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.sweep_value);
    y.push_back(r.estimate);
    EXPECT_GE(r.estimate, 0.0);
    EXPECT_LE(r.estimate, 1.0);
    EXPECT_GE(r.stderr_, 0.0);
  }
  EXPECT_GT(spearman(x, y), 0.9);
}

// Four times the trials halves the standard error, within 20%.
TEST(Overlap, StandardErrorShrinksWithTrials) {
  OverlapConfig cfg = small_overlap();
  cfg.oe_counts = {10};
  cfg.trials = 5000;
  double se1 = run_overlap_experiment(cfg)[0].stderr_;
  cfg.trials = 20000;
  double se4 = run_overlap_experiment(cfg)[0].stderr_;
  EXPECT_NEAR(se4 / se1, 0.5, 0.1);
}

TEST(Overlap, RejectsEmptySweep) {
  OverlapConfig cfg = small_overlap();
  cfg.oe_counts.clear();
  EXPECT_THROW(run_overlap_experiment(cfg), InvalidArgument);
  cfg = small_overlap();
  cfg.trials = 0;
  EXPECT_THROW(run_overlap_experiment(cfg), InvalidArgument);
}

OverflowConfig small_overflow() {
  OverflowConfig cfg;
  cfg.params = derive_params(20, 4, 2, 6, 50, kDefaultTauBits);
  cfg.users = 60;
  cfg.betas = {5, 10, 15, 20, 25, 30};
  cfg.trials = 300;
  cfg.seed = 5;
  return cfg;
}

TEST(Overflow, NonIncreasingInBetaAndReproducible) {
  OverflowConfig cfg = small_overflow();
  auto rows = run_overflow_experiment(cfg);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].estimate, rows[i - 1].estimate);
  EXPECT_EQ(rows.front().estimate, 1.0);
  std::ostringstream a, b;
  write_csv(a, rows, cfg.seed);
  cfg.threads = 2;
  write_csv(b, run_overflow_experiment(cfg), cfg.seed);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Overflow, OccupancyBookkeeping) {
  OverflowConfig cfg = small_overflow();
  cfg.model = LoadModel::kUniform;
  cfg.keyword_counts = KeywordCountModel::kFixedQ;
  auto load = simulate_occupancy(cfg, 0);
  EXPECT_EQ(load.size(), cfg.params.m);
  std::uint64_t total = 0;
  for (auto v : load) total += v;
  // Each user adds one entry per distinct position, at most q * r.
  EXPECT_LE(total, std::uint64_t{cfg.users} * cfg.params.q * cfg.params.r);
  EXPECT_GT(total, std::uint64_t{cfg.users} * cfg.params.q * cfg.params.r * 8 / 10);
}

// The keyword-layout model matches the real stack; the uniform model does not.
TEST(Overflow, CrosscheckAgainstRealStack) {
  OverflowConfig cfg = small_overflow();
  cfg.users = 150;
  Crosscheck layout = overflow_crosscheck(cfg, 10);
  EXPECT_GT(layout.peaks.p_value, 0.05);
  cfg.model = LoadModel::kUniform;
  Crosscheck uniform = overflow_crosscheck(cfg, 10);
  EXPECT_LT(uniform.peaks.p_value, 0.05);
  EXPECT_LT(layout.pooled.statistic, uniform.pooled.statistic);
}

TEST(Accuracy, FullRecallAndHighPrecision) {
  AccuracyConfig cfg;
  cfg.params = derive_params(40, 8, 4, 10, 200, kDefaultTauBits);
  cfg.users = 120;
  cfg.negative_probes = 50;
  cfg.seed = 9;
  AccuracyReport rep = run_accuracy_experiment(cfg);
  EXPECT_EQ(rep.overflowed_users, 0u);
  EXPECT_GT(rep.probes, 0u);
  EXPECT_EQ(rep.recall(), 1.0);
  EXPECT_GE(rep.precision(), 0.99);
  EXPECT_EQ(rep.matches, rep.true_matches + rep.fp_collision + rep.fp_oe_overlap);
}

TEST(Accuracy, EmptySystemHasNoMatches) {
  AccuracyConfig cfg;
  cfg.params = derive_params(40, 8, 4, 10, 50, kDefaultTauBits);
  cfg.users = 0;
  cfg.negative_probes = 100;
  cfg.seed = 10;
  AccuracyReport rep = run_accuracy_experiment(cfg);
  EXPECT_GT(rep.queries, 0u);
  EXPECT_EQ(rep.matches, 0u);
  EXPECT_EQ(rep.probes, 0u);
}

}  // namespace
}  // namespace sbf
