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

#include "sbf/sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <thread>

#include "sbf/errors.h"
#include "sbf/random.h"
#include "sbf/sbf_store.h"
#include "sbf/secure_index.h"

namespace sbf {

namespace {

// Runs fn(trial, worker) for every trial, split into contiguous blocks.
// Results must be written per trial so the thread count never changes them.
template <typename F>
void for_each_trial(std::uint64_t trials, unsigned threads, F&& fn) {
  unsigned n = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::uint64_t>(n, trials));
  if (n <= 1) {
    for (std::uint64_t t = 0; t < trials; ++t) fn(t, 0u);
    return;
  }
  std::vector<std::thread> pool;
  const std::uint64_t block = (trials + n - 1) / n;
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      const std::uint64_t begin = w * block;
      const std::uint64_t end = std::min(trials, begin + block);
      for (std::uint64_t t = begin; t < end; ++t) fn(t, w);
    });
  }
  for (auto& th : pool) th.join();
}

unsigned worker_count(unsigned threads) {
  return threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
}

ExperimentRow proportion_row(std::string name, double value, std::uint64_t hits,
                             std::uint64_t trials, std::uint64_t seed) {
  ExperimentRow row;
  row.sweep_name = std::move(name);
  row.sweep_value = value;
  row.trials = trials;
  row.estimate = static_cast<double>(hits) / static_cast<double>(trials);
  row.stderr_ = std::sqrt(row.estimate * (1 - row.estimate) / static_cast<double>(trials));
  row.seed = seed;
  return row;
}

// Stamps are compared against a per-item epoch, so no clearing is needed.
struct Stamp {
  std::vector<std::uint64_t> marks;
  std::uint64_t epoch = 0;
  explicit Stamp(std::uint64_t m) : marks(m, 0) {}
  void next() { ++epoch; }
  // True the first time `pos` is seen in this epoch.
  bool mark(std::uint64_t pos) {
    if (marks[pos] == epoch) return false;
    marks[pos] = epoch;
    return true;
  }
  bool marked(std::uint64_t pos) const { return marks[pos] == epoch; }
};

}  // namespace

std::vector<ExperimentRow> run_overlap_experiment(const OverlapConfig& cfg) {
  if (cfg.trials == 0) throw InvalidArgument("trials must be positive");
  if (cfg.oe_counts.empty()) throw InvalidArgument("oe sweep is empty");
  if (cfg.m == 0 || cfg.r == 0 || cfg.l == 0 || cfg.gamma_count == 0) {
    throw InvalidArgument("m, r, l and gamma must be positive");
  }
  const std::uint64_t keywords = std::uint64_t{cfg.l} * cfg.gamma_count;
  std::vector<ExperimentRow> rows;
  for (std::uint32_t oe : cfg.oe_counts) {
    const std::uint64_t sweep_seed = mix_seed(cfg.seed ^ (0x6f65ULL << 32) ^ oe);
    std::vector<std::uint8_t> hit(cfg.trials, 0);
    std::vector<Stamp> stamps(worker_count(cfg.threads), Stamp(cfg.m));
    for_each_trial(cfg.trials, cfg.threads, [&](std::uint64_t trial, unsigned w) {
      SimRng rng(trial_seed(sweep_seed, trial));
      Stamp& s = stamps[w];
      s.next();
      std::vector<std::uint64_t> layout(keywords * cfg.r);
      for (auto& pos : layout) pos = rng.uniform(cfg.m);
      for (std::uint64_t i = 0; i < std::uint64_t{oe} * cfg.r; ++i) s.mark(rng.uniform(cfg.m));
      if (oe == 0) return;
      for (std::uint64_t k = 0; k < keywords; ++k) {
        const auto* ps = layout.data() + k * cfg.r;
        if (std::all_of(ps, ps + cfg.r, [&](std::uint64_t p) { return s.marked(p); })) {
          hit[trial] = 1;
          return;
        }
      }
    });
    std::uint64_t hits = 0;
    for (auto h : hit) hits += h;
    ExperimentRow row = proportion_row("oe_count", oe, hits, cfg.trials, cfg.seed);
    const std::uint64_t lambda = rounded_lambda(cfg.m, cfg.r, oe);
    row.analytic = lambda >= cfg.r
                       ? pr_chi_bound(1, lambda, cfg.r, cfg.l, cfg.gamma_count, cfg.m).bound
                       : 0.0;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::uint32_t draw_keyword_count(const OverflowConfig& cfg, SimRng& rng) {
  const std::uint32_t q = cfg.params.q;
  if (cfg.keyword_counts == KeywordCountModel::kFixedQ) return q;
  return 1 + static_cast<std::uint32_t>(rng.uniform(q));
}

// d distinct vocabulary indices by partial Fisher-Yates.
std::vector<std::uint32_t> draw_keywords(std::uint32_t l, std::uint32_t d, SimRng& rng) {
  std::vector<std::uint32_t> pool(l);
  for (std::uint32_t i = 0; i < l; ++i) pool[i] = i;
  for (std::uint32_t i = 0; i < d; ++i) {
    std::swap(pool[i], pool[i + rng.uniform(l - i)]);
  }
  pool.resize(d);
  return pool;
}

void check_overflow_config(const OverflowConfig& cfg) {
  validate(cfg.params);
  if (cfg.trials == 0) throw InvalidArgument("trials must be positive");
}

}  // namespace

std::vector<std::uint32_t> simulate_occupancy(const OverflowConfig& cfg, std::uint64_t trial) {
  check_overflow_config(cfg);
  const SystemParams& p = cfg.params;
  SimRng rng(trial_seed(cfg.seed, trial));
  std::vector<std::uint32_t> load(p.m, 0);
  Stamp s(p.m);

  std::vector<std::uint64_t> layout;
  if (cfg.model == LoadModel::kKeywordLayout) {
    layout.resize(std::uint64_t{p.l} * p.gamma_count * p.r);
    for (auto& pos : layout) pos = rng.uniform(p.m);
  }
  for (std::uint32_t u = 0; u < cfg.users; ++u) {
    s.next();
    const std::uint32_t d = draw_keyword_count(cfg, rng);
    std::uint32_t blinding = p.q - d;
    if (cfg.model == LoadModel::kKeywordLayout) {
      const std::uint64_t g = rng.uniform(p.gamma_count);
      for (std::uint32_t w : draw_keywords(p.l, d, rng)) {
        const std::uint64_t base = (g * p.l + w) * p.r;
        for (std::uint32_t i = 0; i < p.r; ++i) {
          if (s.mark(layout[base + i])) ++load[layout[base + i]];
        }
      }
    } else {
      blinding = p.q;
    }
    for (std::uint64_t i = 0; i < std::uint64_t{blinding} * p.r; ++i) {
      const std::uint64_t pos = rng.uniform(p.m);
      if (s.mark(pos)) ++load[pos];
    }
  }
  return load;
}

std::vector<ExperimentRow> run_overflow_experiment(const OverflowConfig& cfg) {
  check_overflow_config(cfg);
  if (cfg.betas.empty()) throw InvalidArgument("beta sweep is empty");
  std::vector<std::uint32_t> peak(cfg.trials, 0);
  for_each_trial(cfg.trials, cfg.threads, [&](std::uint64_t trial, unsigned) {
    auto load = simulate_occupancy(cfg, trial);
    peak[trial] = *std::max_element(load.begin(), load.end());
  });
  std::vector<ExperimentRow> rows;
  for (std::uint32_t beta : cfg.betas) {
    std::uint64_t over = 0;
    for (auto v : peak) over += v > beta ? 1 : 0;
    rows.push_back(proportion_row("beta", beta, over, cfg.trials, cfg.seed));
  }
  return rows;
}

std::vector<std::uint32_t> real_stack_occupancy(const OverflowConfig& cfg, std::uint64_t trial) {
  check_overflow_config(cfg);
  const SystemParams& p = cfg.params;
  SimRng rng(trial_seed(cfg.seed, trial));
  auto keys = RandomSource::seeded(trial_seed(cfg.seed ^ 0x5eedULL, trial));

  std::vector<Token> vocab;
  for (std::uint32_t i = 0; i < p.l; ++i) vocab.push_back(make_token("w" + std::to_string(i), p.n_bits));
  std::vector<Token> locations;
  for (std::uint32_t g = 0; g < p.gamma_count; ++g) {
    locations.push_back(make_token("g" + std::to_string(g), p.n_bits));
  }
  const Token zone = make_token("zone", p.n_bits);
  SetupResult s = setup(p, vocab, keys);

  std::vector<std::uint32_t> load(p.m, 0);
  for (std::uint32_t u = 0; u < cfg.users; ++u) {
    const std::uint32_t d = draw_keyword_count(cfg, rng);
    const std::uint64_t g = rng.uniform(p.gamma_count);
    std::vector<Token> kws;
    for (std::uint32_t w : draw_keywords(p.l, d, rng)) kws.push_back(vocab[w]);
    UserKeyring kr = register_user(s.secrets, kws, zone);
    UserIndex idx = build_index(kr, locations[g], p, keys);
    for (std::uint64_t pos : idx.bf.set_positions()) ++load[pos];
  }
  return load;
}

Crosscheck overflow_crosscheck(const OverflowConfig& cfg, std::uint64_t trials) {
  std::vector<double> sim, real, sim_peak, real_peak;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto a = simulate_occupancy(cfg, t);
    auto b = real_stack_occupancy(cfg, t);
    sim_peak.push_back(*std::max_element(a.begin(), a.end()));
    real_peak.push_back(*std::max_element(b.begin(), b.end()));
    sim.insert(sim.end(), a.begin(), a.end());
    real.insert(real.end(), b.begin(), b.end());
  }
  return {ks_two_sample(std::move(sim_peak), std::move(real_peak)),
          ks_two_sample(std::move(sim), std::move(real))};
}

AccuracyReport run_accuracy_experiment(const AccuracyConfig& cfg) {
  const SystemParams& p = cfg.params;
  validate(p);
  SimRng rng(cfg.seed);
  auto keys = RandomSource::seeded(mix_seed(cfg.seed ^ 0xacc0ULL));

  std::vector<Token> vocab;
  for (std::uint32_t i = 0; i < p.l; ++i) vocab.push_back(make_token("w" + std::to_string(i), p.n_bits));
  std::vector<Token> locations;
  for (std::uint32_t g = 0; g < p.gamma_count; ++g) {
    locations.push_back(make_token("g" + std::to_string(g), p.n_bits));
  }
  const Token zone = make_token("zone", p.n_bits);
  SetupResult s = setup(p, vocab, keys);
  UserKeyring agent = agent_keyring(s.secrets);
  StorageBloomFilter store(p, zone);

  struct Owner {
    std::vector<std::uint32_t> keywords;
    std::uint64_t location;
    BitFilter real_bits;
  };
  std::map<Handle, Owner> owners;
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::set<Handle>> truth;
  AccuracyReport rep;

  for (std::uint32_t u = 0; u < cfg.users; ++u) {
    const std::uint32_t d = 1 + static_cast<std::uint32_t>(rng.uniform(p.q));
    Owner o;
    o.location = rng.uniform(p.gamma_count);
    o.keywords = draw_keywords(p.l, d, rng);
    std::vector<Token> kws;
    for (auto w : o.keywords) kws.push_back(vocab[w]);
    UserKeyring kr = register_user(s.secrets, kws, zone);
    UserIndex idx = build_index(kr, locations[o.location], p, keys);
    MetaInfo mi;
    mi.pseudonym = make_token("user" + std::to_string(u), p.n_bits);
    mi.server_id = make_token("server", p.n_bits);
    mi.memory_index = make_token("slot" + std::to_string(u), p.n_bits);
    mi.health = kws;
    UploadPacket pkt = make_upload_packet(idx, mi, s.agent.public_key, zone, p, keys);
    try {
      store.ingest(pkt);
    } catch (const CapacityError&) {
      ++rep.overflowed_users;
      continue;
    }
    o.real_bits = idx.cbf.support();
    for (auto w : o.keywords) truth[{w, o.location}].insert(pkt.sealed.handle);
    owners.emplace(pkt.sealed.handle, std::move(o));
  }

  std::set<std::pair<std::uint32_t, std::uint64_t>> queries;
  for (const auto& [key, _] : truth) queries.insert(key);
  for (std::uint32_t i = 0; i < cfg.negative_probes; ++i) {
    queries.insert({static_cast<std::uint32_t>(rng.uniform(p.l)), rng.uniform(p.gamma_count)});
  }

  for (const auto& [w, g] : queries) {
    const PositionSet ps = keyword_positions(agent, vocab[w], locations[g]);
    const SearchResult res = store.search_location(ps);
    const auto it = truth.find({w, g});
    const std::set<Handle> empty;
    const std::set<Handle>& expected = it == truth.end() ? empty : it->second;
    std::set<Handle> got;
    for (const auto& rec : res.matches) got.insert(rec.handle);
    ++rep.queries;
    rep.matches += got.size();
    for (const Handle& h : got) {
      if (expected.count(h)) {
        ++rep.true_matches;
      } else if (owners.at(h).real_bits.contains(ps)) {
        ++rep.fp_collision;
      } else {
        ++rep.fp_oe_overlap;
      }
    }
    for (const Handle& h : expected) {
      ++rep.probes;
      rep.recalled += got.count(h);
    }
  }
  return rep;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, std::uint64_t seed) {
  out << "# seed=" << seed << "\n";
  out << "sweep_name,sweep_value,trials,estimate,stderr,analytic,seed\n";
  for (const auto& r : rows) {
    out << r.sweep_name << ',' << num(r.sweep_value) << ',' << r.trials << ',' << num(r.estimate)
        << ',' << num(r.stderr_) << ',' << (r.analytic ? num(*r.analytic) : "") << ',' << r.seed
        << "\n";
  }
}

void write_lines(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  for (const auto& r : rows) {
    out << r.sweep_name << '=' << num(r.sweep_value) << "  estimate=" << num(r.estimate)
        << " +- " << num(r.stderr_) << "  trials=" << r.trials;
    if (r.analytic) out << "  analytic=" << num(*r.analytic);
    out << "\n";
  }
}

}  // namespace sbf
