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

// Operator command line for the searchable store.

#include <signal.h>
#include <sodium.h>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbf/analysis.h"
#include "sbf/errors.h"
#include "sbf/net.h"
#include "sbf/params.h"
#include "sbf/sbf_store.h"
#include "sbf/secure_index.h"
#include "sbf/sim.h"

namespace sbf::cli {
namespace {

constexpr std::string_view kPacketMagic = "SBFPKT1";
constexpr std::string_view kIndexMagic = "SBFIDX1";

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

Bytes read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_binary(const std::string& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

void expect_magic(ByteReader& r, std::string_view magic, const std::string& what) {
  ByteView got = r.raw(magic.size());
  if (!std::equal(got.begin(), got.end(), magic.begin())) throw FormatError(what + ": bad magic");
}

// Packet file: magic || params || blob32 packet.
void write_packet_file(const std::string& path, const SystemParams& p, const UploadPacket& pkt) {
  ByteWriter w;
  w.raw(as_bytes(kPacketMagic));
  encode_params(w, p);
  w.blob32(pkt.encode());
  write_binary(path, std::move(w).take());
}

std::pair<SystemParams, UploadPacket> read_packet_file(const std::string& path) {
  Bytes bytes = read_binary(path);
  ByteReader r(bytes);
  expect_magic(r, kPacketMagic, path);
  SystemParams p = decode_params(r);
  UploadPacket pkt = UploadPacket::decode(r.blob32(), p);
  r.expect_end(path);
  return {p, std::move(pkt)};
}

// Index file: magic || params || blob32 index.
void write_index_file(const std::string& path, const SystemParams& p, const UserIndex& idx) {
  ByteWriter w;
  w.raw(as_bytes(kIndexMagic));
  encode_params(w, p);
  w.blob32(idx.serialize());
  write_binary(path, std::move(w).take());
}

std::pair<SystemParams, UserIndex> read_index_file(const std::string& path) {
  Bytes bytes = read_binary(path);
  ByteReader r(bytes);
  expect_magic(r, kIndexMagic, path);
  SystemParams p = decode_params(r);
  UserIndex idx = UserIndex::parse(r.blob32());
  r.expect_end(path);
  check_invariants(idx, p);
  return {p, std::move(idx)};
}

UserKeyring read_keyring(const std::string& path) { return UserKeyring::parse(read_binary(path)); }

AgentKeyPair read_agent_secret(const std::string& path) {
  Bytes b = read_key_file(path);
  if (b.size() != kAgentKeyBytes) throw FormatError(path + ": agent key must be 32 bytes");
  AgentSecretKey sk;
  std::copy(b.begin(), b.end(), sk.bytes.begin());
  sodium_memzero(b.data(), b.size());
  return AgentKeyPair::from_secret(sk);
}

AgentPublicKey read_agent_public(const std::string& path) {
  Bytes b = read_key_file(path);
  if (b.size() != kAgentKeyBytes) throw FormatError(path + ": agent key must be 32 bytes");
  AgentPublicKey pk;
  std::copy(b.begin(), b.end(), pk.bytes.begin());
  return pk;
}

RandomSource rng_for(const std::optional<std::uint64_t>& seed) {
  return seed ? RandomSource::seeded(*seed) : RandomSource::system();
}

// ---------------------------------------------------------------------------
// Shared flags
// ---------------------------------------------------------------------------

struct ParamFlags {
  std::string config;
  std::map<std::string, std::uint64_t> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key=value parameter file");
    for (const char* key : {"l", "r", "gamma", "q", "beta", "tau_kbits", "s_bits", "n_bits", "m"}) {
      app->add_option_function<std::uint64_t>(
          std::string("--") + key, [this, key](std::uint64_t v) { values[key] = v; },
          std::string("override ") + key);
    }
  }

  SystemParams resolve() const {
    ParamOverrides merged;
    if (!config.empty()) merged = load_param_file(config);
    ParamOverrides flags;
    flags.values = values;
    merged.merge(flags);
    SystemParams p = merged.resolve();
    validate(p);
    return p;
  }
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7400;

  void attach(CLI::App* app) {
    app->add_option("--host", host, "server address");
    app->add_option("--port", port, "server port");
  }
};

enum class Format { kText, kCsv, kLines };

void attach_format(CLI::App* app, Format& fmt) {
  app->add_option("--format", fmt, "output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Format>{{"text", Format::kText}, {"csv", Format::kCsv}, {"lines", Format::kLines}},
          CLI::ignore_case));
}

std::string join_hex(const std::vector<Token>& toks, char sep) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += sep;
    out += to_hex(toks[i]);
  }
  return out;
}

void print_records(const std::vector<SealedRecord>& recs, const AgentKeyPair& agent,
                   const SystemParams& p, Format fmt) {
  if (fmt == Format::kCsv) std::cout << "handle,pseudonym,server_id,memory_index,keywords\n";
  for (const auto& rec : recs) {
    MetaInfo mi = open_record(agent, rec, p);
    const std::string h = to_hex(rec.handle);
    if (fmt == Format::kCsv) {
      std::cout << h << ',' << to_hex(mi.pseudonym) << ',' << to_hex(mi.server_id) << ','
                << to_hex(mi.memory_index) << ',' << join_hex(mi.keywords(), ';') << '\n';
    } else {
      std::cout << "handle=" << h << " pseudonym=" << to_hex(mi.pseudonym)
                << " server_id=" << to_hex(mi.server_id) << " memory_index=" << to_hex(mi.memory_index)
                << " keywords=" << join_hex(mi.keywords(), ';') << '\n';
    }
  }
  if (fmt == Format::kText) std::cout << recs.size() << " record(s)\n";
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct SetupCmd {
  ParamFlags params;
  std::string vocab_file;
  std::vector<std::string> words;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;

  void run() {
    SystemParams p = params.resolve();
    std::vector<std::string> text = words;
    if (!vocab_file.empty()) {
      auto lines = read_lines(vocab_file);
      text.insert(text.end(), lines.begin(), lines.end());
    }
    std::vector<Token> vocab;
    for (const auto& w : text) vocab.push_back(make_token(w, p.n_bits));
    RandomSource rng = rng_for(seed);
    SetupResult s = setup(p, vocab, rng);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_binary((dir / "master.bin").string(), s.secrets.serialize());
    write_binary((dir / "agent.keyring").string(), agent_keyring(s.secrets).serialize());
    write_key_file((dir / "agent.sk").string(), s.agent.secret_key.bytes);
    write_key_file((dir / "agent.pk").string(), s.agent.public_key.bytes);
    std::cout << "setup " << describe(p) << "\n"
              << "wrote " << (dir / "master.bin").string() << " " << (dir / "agent.keyring").string()
              << " " << (dir / "agent.sk").string() << " " << (dir / "agent.pk").string() << "\n";
  }
};

struct RegisterCmd {
  std::string master;
  std::vector<std::string> keywords;
  std::string zone;
  std::string out;

  void run() {
    MasterSecrets ms = MasterSecrets::parse(read_binary(master));
    std::vector<Token> toks;
    for (const auto& k : keywords) toks.push_back(make_token(k, ms.params.n_bits));
    UserKeyring kr = register_user(ms, toks, make_token(zone, ms.params.n_bits));
    write_binary(out, kr.serialize());
    std::cout << "registered " << toks.size() << " keyword(s) for zone " << zone << " -> " << out << "\n";
  }
};

struct BuildIndexCmd {
  std::string keyring;
  std::string location;
  std::string agent_pk;
  std::string pseudonym;
  std::string server_id = "ccs";
  std::string memory_index = "0";
  std::vector<std::string> emergency;
  std::string out_index;
  std::string out_packet;
  std::optional<std::uint64_t> seed;

  void run() {
    UserKeyring kr = read_keyring(keyring);
    const SystemParams& p = kr.params;
    RandomSource rng = rng_for(seed);
    UserIndex idx = build_index(kr, make_token(location, p.n_bits), p, rng);
    MetaInfo mi;
    mi.pseudonym = make_token(pseudonym, p.n_bits);
    mi.server_id = make_token(server_id, p.n_bits);
    mi.memory_index = make_token(memory_index, p.n_bits);
    mi.health = idx.keywords;
    for (const auto& e : emergency) mi.emergency.push_back(make_token(e, p.n_bits));
    UploadPacket pkt = make_upload_packet(idx, mi, read_agent_public(agent_pk), kr.zone, p, rng);
    write_index_file(out_index, p, idx);
    write_packet_file(out_packet, p, pkt);
    std::cout << "index bits=" << idx.bf.popcount() << " handle=" << to_hex(pkt.sealed.handle)
              << " packet_bytes=" << pkt.encode().size() << "\n";
  }
};

struct UploadCmd {
  Endpoint ep;
  std::string packet;
  std::optional<std::uint64_t> seed;

  void run() {
    auto [p, pkt] = read_packet_file(packet);
    RandomSource rng = rng_for(seed);
    Client c = Client::connect(ep.host, ep.port, Role::kOwner, p, rng);
    const std::uint64_t written = c.upload(pkt);
    std::cout << "uploaded handle=" << to_hex(pkt.sealed.handle) << " buffers=" << written << "\n";
  }
};

struct SearchCmd {
  Endpoint ep;
  std::string keyring;
  std::string agent_sk;
  std::string zone;
  std::string location;
  std::vector<std::string> keywords;
  Format format = Format::kText;
  std::optional<std::uint64_t> seed;

  void run(bool conjunctive) {
    UserKeyring kr = read_keyring(keyring);
    const SystemParams& p = kr.params;
    AgentKeyPair agent = read_agent_secret(agent_sk);
    const Token g = make_token(location, p.n_bits);
    const Token z = make_token(zone, p.n_bits);
    std::vector<Token> toks;
    for (const auto& k : keywords) toks.push_back(make_token(k, p.n_bits));
    RandomSource rng = rng_for(seed);
    Client c = Client::connect(ep.host, ep.port, Role::kAgent, p, rng);
    std::vector<SealedRecord> recs;
    if (conjunctive) {
      recs = c.search_filter(z, build_and_query(kr, toks, g, p));
    } else {
      if (toks.size() != 1) throw InvalidArgument("search takes exactly one keyword");
      recs = c.search_location(z, keyword_positions(kr, toks[0], g));
    }
    print_records(recs, agent, p, format);
  }
};

struct RemoveCmd {
  Endpoint ep;
  std::string keyring;
  std::string index;
  std::string packet;
  std::string keyword;
  std::string out_index;
  std::string replace_packet;
  std::string agent_pk;
  std::string pseudonym;
  std::string server_id = "ccs";
  std::string memory_index = "0";
  std::optional<std::uint64_t> seed;

  void run() {
    UserKeyring kr = read_keyring(keyring);
    auto [p, idx] = read_index_file(index);
    if (!(p == kr.params)) throw InvalidArgument("index and keyring parameters differ");
    auto [pp, pkt] = read_packet_file(packet);
    RandomSource rng = rng_for(seed);
    RemovalPlan plan = build_removal(idx, kr, make_token(keyword, p.n_bits), idx.location,
                                     pkt.sealed.handle, p, rng);
    if (!replace_packet.empty()) {
      if (agent_pk.empty() || pseudonym.empty()) {
        throw InvalidArgument("--replace needs --agent-pk and --pseudonym");
      }
      MetaInfo mi;
      mi.pseudonym = make_token(pseudonym, p.n_bits);
      mi.server_id = make_token(server_id, p.n_bits);
      mi.memory_index = make_token(memory_index, p.n_bits);
      mi.health = plan.updated.keywords;
      UploadPacket next =
          make_upload_packet(plan.updated, mi, read_agent_public(agent_pk), idx.zone, p, rng);
      plan.request.replacement = next;
      write_packet_file(replace_packet, p, next);
    }
    Client c = Client::connect(ep.host, ep.port, Role::kOwner, p, rng);
    RemoveAck ack = c.remove(plan.request);
    write_index_file(out_index.empty() ? index : out_index, p, plan.updated);
    std::cout << "removed pruned=" << ack.pruned << " dropped=" << (ack.dropped ? 1 : 0)
              << " swaps=" << plan.swaps << " replacement_buffers=" << ack.replacement_buffers
              << " warnings=" << ack.warnings << "\n";
  }
};


struct ServeCmd {
  ParamFlags params;
  Endpoint ep;
  std::vector<std::string> zones;
  std::string store_dir;
  double duration = 0;

  std::string store_path(const Token& zone) const {
    return (std::filesystem::path(store_dir) / (to_hex(zone) + ".sbf")).string();
  }

  void run() {
    SystemParams p = params.resolve();
    if (zones.empty()) throw InvalidArgument("serve needs at least one --zone");
    auto registry = std::make_shared<ZoneRegistry>();
    for (const auto& name : zones) {
      const Token z = make_token(name, p.n_bits);
      if (!store_dir.empty() && std::filesystem::exists(store_path(z))) {
        StorageBloomFilter s = StorageBloomFilter::load_file(store_path(z));
        if (!(s.params() == p)) throw InvalidArgument("stored zone " + name + " has different parameters");
        std::cout << "loaded zone " << name << " records=" << s.record_count() << "\n";
        registry->add(std::move(s));
      } else {
        registry->add(StorageBloomFilter(p, z));
      }
    }
    // Signals are taken synchronously by this thread only.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Server server(p, registry);
    server.start(ep.host, ep.port);
    std::cout << "listening host=" << ep.host << " port=" << server.port() << " zones=" << zones.size()
              << std::endl;
    if (duration > 0) {
      timespec ts{static_cast<time_t>(duration),
                  static_cast<long>((duration - static_cast<double>(static_cast<time_t>(duration))) * 1e9)};
      sigtimedwait(&set, nullptr, &ts);
    } else {
      int sig = 0;
      sigwait(&set, &sig);
    }
    server.stop();
    if (!store_dir.empty()) {
      std::filesystem::create_directories(store_dir);
      for (const auto& z : registry->zones()) {
        registry->read(z, [&](const StorageBloomFilter& s) {
          s.save_file(store_path(z));
          return 0;
        });
      }
    }
    ServerStats st = server.stats();
    std::cout << "stopped sessions=" << st.sessions << " requests=" << st.requests
              << " errors=" << st.errors << std::endl;
  }
};

struct AnalyzeCmd {
  ParamFlags params;
  std::uint64_t t = 1000;
  std::optional<std::uint32_t> oe;
  std::uint64_t users = 0;
  Format format = Format::kText;

  void run() {
    SystemParams p = params.resolve();
    OverlapReport ov = overlap_report(p);
    const std::uint32_t oe_count = oe.value_or(p.q);
    ChiBound chi = pr_chi_bound(t, rounded_lambda(p.m, p.r, oe_count), p.r, p.l, p.gamma_count, p.m);
    std::vector<std::pair<std::string, std::string>> rows;
    auto num = [](double v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return std::string(buf);
    };
    rows.emplace_back("m", std::to_string(p.m));
    rows.emplace_back("lambda", num(expected_distinct(p, p.q)));
    rows.emplace_back("lambda_rounded", std::to_string(ov.lambda));
    rows.emplace_back("pr_varpi", num(ov.pr_varpi));
    rows.emplace_back("pr_psi", num(ov.pr_psi));
    rows.emplace_back("chi_t", std::to_string(t));
    rows.emplace_back("chi_oe", std::to_string(oe_count));
    rows.emplace_back("pr_chi_bound", num(chi.bound));
    rows.emplace_back("upload_bits", std::to_string(comm_overhead_upload(p)));
    rows.emplace_back("memory_mib", num(memory_model(p) / kBytesPerMiB));
    if (users > 0) rows.emplace_back("expected_load", num(double(users) * p.q * p.r / double(p.m)));
    switch (format) {
      case Format::kCsv:
        std::cout << "quantity,value\n";
        for (auto& [k, v] : rows) std::cout << k << ',' << v << '\n';
        break;
      case Format::kLines:
        for (auto& [k, v] : rows) std::cout << k << '=' << v << '\n';
        break;
      case Format::kText:
        std::cout << describe(p) << '\n';
        for (auto& [k, v] : rows) std::printf("  %-16s %s\n", k.c_str(), v.c_str());
        std::fflush(stdout);
        break;
    }
  }
};

void emit_rows(const std::vector<ExperimentRow>& rows, std::uint64_t seed, Format fmt,
               const std::string& out) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw Error("cannot write " + out);
    os = &file;
  }
  if (fmt == Format::kLines) {
    write_lines(*os, rows);
  } else {
    write_csv(*os, rows, seed);
  }
}

struct OverlapCmd {
  ParamFlags params;
  std::vector<std::uint32_t> oe{5, 10, 15, 20, 25, 30};
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Format format = Format::kCsv;
  std::string out;

  void run() {
    SystemParams p = params.resolve();
    OverlapConfig cfg;
    cfg.m = p.m;
    cfg.r = p.r;
    cfg.l = p.l;
    cfg.gamma_count = p.gamma_count;
    cfg.oe_counts = oe;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    emit_rows(run_overlap_experiment(cfg), seed, format, out);
  }
};

struct OverflowCmd {
  ParamFlags params;
  std::uint32_t users = 1000;
  std::vector<std::uint32_t> betas{20, 35, 50};
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  LoadModel model = LoadModel::kKeywordLayout;
  KeywordCountModel counts = KeywordCountModel::kUniformOneToQ;
  std::uint64_t crosscheck = 0;
  Format format = Format::kCsv;
  std::string out;

  void run() {
    OverflowConfig cfg;
    cfg.params = params.resolve();
    cfg.users = users;
    cfg.betas = betas;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.model = model;
    cfg.keyword_counts = counts;
    if (crosscheck > 0) {
      Crosscheck cc = overflow_crosscheck(cfg, crosscheck);
      std::cout << "crosscheck trials=" << crosscheck << " peaks_D=" << cc.peaks.statistic
                << " peaks_p=" << cc.peaks.p_value << " pooled_D=" << cc.pooled.statistic << "\n";
      return;
    }
    emit_rows(run_overflow_experiment(cfg), seed, format, out);
  }
};

struct AccuracyCmd {
  ParamFlags params;
  std::uint32_t users = 100;
  std::uint32_t probes = 200;
  std::uint64_t seed = 1;
  Format format = Format::kText;

  void run() {
    AccuracyConfig cfg;
    cfg.params = params.resolve();
    cfg.users = users;
    cfg.negative_probes = probes;
    cfg.seed = seed;
    AccuracyReport r = run_accuracy_experiment(cfg);
    std::vector<std::pair<std::string, std::string>> rows{
        {"probes", std::to_string(r.probes)},
        {"recalled", std::to_string(r.recalled)},
        {"recall", std::to_string(r.recall())},
        {"queries", std::to_string(r.queries)},
        {"matches", std::to_string(r.matches)},
        {"true_matches", std::to_string(r.true_matches)},
        {"precision", std::to_string(r.precision())},
        {"fp_oe_overlap", std::to_string(r.fp_oe_overlap)},
        {"fp_collision", std::to_string(r.fp_collision)},
        {"overflowed_users", std::to_string(r.overflowed_users)},
    };
    if (format == Format::kCsv) {
      std::cout << "# seed=" << seed << "\nquantity,value\n";
      for (auto& [k, v] : rows) std::cout << k << ',' << v << '\n';
    } else {
      for (auto& [k, v] : rows) std::cout << k << '=' << v << '\n';
    }
  }
};

struct SnapshotCmd {
  std::string action;
  std::string file;
  std::string zone;
  ParamFlags params;

  void run() {
    if (action == "init") {
      SystemParams p = params.resolve();
      if (zone.empty()) throw InvalidArgument("snapshot init needs --zone");
      StorageBloomFilter(p, make_token(zone, p.n_bits)).save_file(file);
      std::cout << "initialised " << file << "\n";
      return;
    }
    StorageBloomFilter s = StorageBloomFilter::load_file(file);
    if (action == "verify") {
      if (s.snapshot() != read_binary(file)) throw FormatError(file + ": re-encoding differs");
    }
    MemoryUsage mu = s.memory_usage();
    std::cout << "zone=" << to_hex(s.zone()) << " records=" << s.record_count()
              << " max_occupancy=" << s.max_occupancy() << " entries=" << mu.actual_entries
              << " model_mib=" << mu.model_bytes / kBytesPerMiB << "\n"
              << describe(s.params()) << "\n";
  }
};

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Searchable storage Bloom filter tool"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SetupCmd setup_cmd;
  auto* s = app.add_subcommand("setup", "generate master secrets and agent keys");
  setup_cmd.params.attach(s);
  s->add_option("--vocab", setup_cmd.vocab_file, "vocabulary file, one keyword per line");
  s->add_option("--keyword", setup_cmd.words, "vocabulary keyword (repeatable)");
  s->add_option("--out-dir", setup_cmd.out_dir, "output directory");
  s->add_option("--seed", setup_cmd.seed, "deterministic seed");
  s->callback([&] { setup_cmd.run(); });

  RegisterCmd reg;
  s = app.add_subcommand("register", "derive a data owner's keyring");
  s->add_option("--master", reg.master)->required();
  s->add_option("--keyword", reg.keywords)->required();
  s->add_option("--zone", reg.zone)->required();
  s->add_option("--out", reg.out)->required();
  s->callback([&] { reg.run(); });

  BuildIndexCmd bi;
  s = app.add_subcommand("build-index", "build an index and an upload packet");
  s->add_option("--keyring", bi.keyring)->required();
  s->add_option("--location", bi.location)->required();
  s->add_option("--agent-pk", bi.agent_pk)->required();
  s->add_option("--pseudonym", bi.pseudonym)->required();
  s->add_option("--server-id", bi.server_id);
  s->add_option("--memory-index", bi.memory_index);
  s->add_option("--emergency", bi.emergency);
  s->add_option("--out-index", bi.out_index)->required();
  s->add_option("--out-packet", bi.out_packet)->required();
  s->add_option("--seed", bi.seed);
  s->callback([&] { bi.run(); });

  UploadCmd up;
  s = app.add_subcommand("upload", "send an upload packet");
  up.ep.attach(s);
  s->add_option("--packet", up.packet)->required();
  s->add_option("--seed", up.seed);
  s->callback([&] { up.run(); });

  SearchCmd search;
  for (bool conj : {false, true}) {
    s = app.add_subcommand(conj ? "search-and" : "search",
                           conj ? "AND query over several keywords" : "single keyword search");
    search.ep.attach(s);
    s->add_option("--keyring", search.keyring, "agent keyring")->required();
    s->add_option("--agent-sk", search.agent_sk, "agent secret key file")->required();
    s->add_option("--zone", search.zone)->required();
    s->add_option("--location", search.location)->required();
    s->add_option("--keyword", search.keywords)->required();
    s->add_option("--seed", search.seed);
    attach_format(s, search.format);
    s->callback([&search, conj] { search.run(conj); });
  }

  RemoveCmd rm;
  s = app.add_subcommand("remove", "remove one keyword of an uploaded record");
  rm.ep.attach(s);
  s->add_option("--keyring", rm.keyring)->required();
  s->add_option("--index", rm.index)->required();
  s->add_option("--packet", rm.packet, "packet file of the uploaded record")->required();
  s->add_option("--keyword", rm.keyword)->required();
  s->add_option("--out-index", rm.out_index, "updated index (default: overwrite --index)");
  s->add_option("--replace", rm.replace_packet, "also upload a replacement, written here");
  s->add_option("--agent-pk", rm.agent_pk);
  s->add_option("--pseudonym", rm.pseudonym);
  s->add_option("--server-id", rm.server_id);
  s->add_option("--memory-index", rm.memory_index);
  s->add_option("--seed", rm.seed);
  s->callback([&] { rm.run(); });

  ServeCmd serve;
  s = app.add_subcommand("serve", "run the storage server");
  serve.params.attach(s);
  serve.ep.attach(s);
  s->add_option("--zone", serve.zones, "zone name (repeatable)");
  s->add_option("--store-dir", serve.store_dir, "load zones from and save them to this directory");
  s->add_option("--duration", serve.duration, "stop after this many seconds");
  s->callback([&] { serve.run(); });

  AnalyzeCmd an;
  s = app.add_subcommand("analyze", "print the analytic quantities");
  an.params.attach(s);
  s->add_option("--t", an.t, "users in the zone for the chi bound");
  s->add_option("--oe", an.oe, "blinding elements for the chi bound (default q)");
  s->add_option("--users", an.users, "users for the expected buffer load");
  attach_format(s, an.format);
  s->callback([&] { an.run(); });

  OverlapCmd ov;
  s = app.add_subcommand("simulate-overlap", "Monte Carlo blinding overlap");
  ov.params.attach(s);
  s->add_option("--oe", ov.oe, "blinding element counts to sweep")->delimiter(',');
  s->add_option("--trials", ov.trials);
  s->add_option("--seed", ov.seed);
  s->add_option("--threads", ov.threads);
  s->add_option("--out", ov.out, "write to a file instead of stdout");
  attach_format(s, ov.format);
  s->callback([&] { ov.run(); });

  OverflowCmd of;
  s = app.add_subcommand("simulate-overflow", "Monte Carlo buffer overflow");
  of.params.attach(s);
  s->add_option("--users", of.users);
  s->add_option("--betas", of.betas, "buffer capacities to sweep")->delimiter(',');
  s->add_option("--trials", of.trials);
  s->add_option("--seed", of.seed);
  s->add_option("--threads", of.threads);
  s->add_option("--model", of.model)
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, LoadModel>{{"layout", LoadModel::kKeywordLayout}, {"uniform", LoadModel::kUniform}}));
  s->add_option("--keyword-counts", of.counts)
      ->transform(CLI::CheckedTransformer(std::map<std::string, KeywordCountModel>{
          {"uniform", KeywordCountModel::kUniformOneToQ}, {"fixed", KeywordCountModel::kFixedQ}}));
  s->add_option("--crosscheck", of.crosscheck, "compare with this many real-stack trials instead");
  s->add_option("--out", of.out);
  attach_format(s, of.format);
  s->callback([&] { of.run(); });

  AccuracyCmd acc;
  s = app.add_subcommand("simulate-accuracy", "end-to-end recall and precision");
  acc.params.attach(s);
  s->add_option("--users", acc.users);
  s->add_option("--probes", acc.probes, "random negative queries");
  s->add_option("--seed", acc.seed);
  attach_format(s, acc.format);
  s->callback([&] { acc.run(); });

  SnapshotCmd snap;
  s = app.add_subcommand("snapshot", "create, inspect or verify a store file");
  s->add_option("action", snap.action)->required()->check(CLI::IsMember({"init", "info", "verify"}));
  s->add_option("file", snap.file)->required();
  s->add_option("--zone", snap.zone, "zone name for init");
  snap.params.attach(s);
  s->callback([&] { snap.run(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const ServerError& e) {
    std::cerr << "error: server: " << e.what() << "\n";
    return 1;
  } catch (const TransportError& e) {
    std::cerr << "error: transport: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: invalid: " << e.what() << "\n";
    return 1;
  } catch (const NotFound& e) {
    std::cerr << "error: not_found: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: format: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sbf::cli

int main(int argc, char** argv) { return sbf::cli::run(argc, argv); }
