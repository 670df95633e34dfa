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

// Python bindings for the core operations.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "sbf/analysis.h"
#include "sbf/crypto_envelope.h"
#include "sbf/errors.h"
#include "sbf/net.h"
#include "sbf/params.h"
#include "sbf/sbf_store.h"
#include "sbf/secure_index.h"
#include "sbf/sim.h"

namespace py = pybind11;

// Byte strings cross the boundary as Python bytes rather than int lists.
namespace pybind11::detail {

template <>
struct type_caster<sbf::Bytes> {
  PYBIND11_TYPE_CASTER(sbf::Bytes, const_name("bytes"));

  bool load(handle src, bool) {
    if (PyBytes_Check(src.ptr())) {
      const char* data = PyBytes_AsString(src.ptr());
      value.assign(data, data + PyBytes_Size(src.ptr()));
      return true;
    }
    if (PyByteArray_Check(src.ptr())) {
      const char* data = PyByteArray_AsString(src.ptr());
      value.assign(data, data + PyByteArray_Size(src.ptr()));
      return true;
    }
    return false;
  }

  static handle cast(const sbf::Bytes& b, return_value_policy, handle) {
    return PyBytes_FromStringAndSize(reinterpret_cast<const char*>(b.data()),
                                     static_cast<Py_ssize_t>(b.size()));
  }
};

template <std::size_t N>
struct fixed_bytes_caster {
  using Array = std::array<std::uint8_t, N>;
  PYBIND11_TYPE_CASTER(Array, const_name("bytes"));

  bool load(handle src, bool) {
    if (!PyBytes_Check(src.ptr()) || PyBytes_Size(src.ptr()) != static_cast<Py_ssize_t>(N)) return false;
    const char* data = PyBytes_AsString(src.ptr());
    std::copy(data, data + N, value.begin());
    return true;
  }

  static handle cast(const Array& a, return_value_policy, handle) {
    return PyBytes_FromStringAndSize(reinterpret_cast<const char*>(a.data()), N);
  }
};

template <>
struct type_caster<std::array<std::uint8_t, 16>> : fixed_bytes_caster<16> {};
template <>
struct type_caster<std::array<std::uint8_t, 32>> : fixed_bytes_caster<32> {};

}  // namespace pybind11::detail

namespace {

using namespace sbf;

py::dict row_to_dict(const ExperimentRow& r) {
  py::dict d;
  d["sweep_name"] = r.sweep_name;
  d["sweep_value"] = r.sweep_value;
  d["trials"] = r.trials;
  d["estimate"] = r.estimate;
  d["stderr"] = r.stderr_;
  d["analytic"] = r.analytic ? py::cast(*r.analytic) : py::none();
  d["seed"] = r.seed;
  return d;
}

py::list rows_to_list(const std::vector<ExperimentRow>& rows) {
  py::list out;
  for (const auto& r : rows) out.append(row_to_dict(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Searchable storage Bloom filter core";

  // Subclasses are registered after their base so they are matched first.
  static py::exception<Error> error(m, "SbfError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<CryptoError>(m, "CryptoError", error.ptr());
  py::register_exception<NotFound>(m, "NotFound", PyExc_KeyError);
  py::register_exception<CapacityError>(m, "CapacityError", error.ptr());
  py::register_exception<ServerError>(m, "ServerError", error.ptr());
  py::register_exception<TransportError>(m, "TransportError", error.ptr());

  // Parameters
  py::class_<SystemParams>(m, "SystemParams")
      .def_readonly("l", &SystemParams::l)
      .def_readonly("r", &SystemParams::r)
      .def_readonly("gamma_count", &SystemParams::gamma_count)
      .def_readonly("q", &SystemParams::q)
      .def_readonly("m", &SystemParams::m)
      .def_readonly("s_bits", &SystemParams::s_bits)
      .def_readonly("n_bits", &SystemParams::n_bits)
      .def_readonly("beta", &SystemParams::beta)
      .def_readonly("tau_bits", &SystemParams::tau_bits)
      .def("__eq__", [](const SystemParams& a, const SystemParams& b) { return a == b; })
      .def("__repr__", [](const SystemParams& p) { return "SystemParams(" + describe(p) + ")"; });

  m.def("derive_params", &derive_params, py::arg("l"), py::arg("r"), py::arg("gamma_count"), py::arg("q"),
        py::arg("beta") = kDefaultBeta, py::arg("tau_bits") = kDefaultTauBits,
        py::arg("s_bits") = kDefaultSecurityBits, py::arg("n_bits") = kDefaultTokenBits);
  m.def("with_filter_length", &with_filter_length, py::arg("params"), py::arg("m"));
  m.def("filter_length", &filter_length, py::arg("l"), py::arg("r"), py::arg("gamma_count"));
  m.def("expected_distinct", py::overload_cast<std::uint64_t, std::uint32_t, double>(&expected_distinct),
        py::arg("m"), py::arg("r"), py::arg("inserted"));
  m.def("load_params", [](const std::string& path) {
    SystemParams p = load_param_file(path).resolve();
    validate(p);
    return p;
  });
  m.def("parse_params", [](const std::string& text) {
    SystemParams p = parse_param_text(text).resolve();
    validate(p);
    return p;
  });

  // Randomness
  py::class_<RandomSource>(m, "RandomSource")
      .def_static("seeded", &RandomSource::seeded, py::arg("seed"))
      .def_static("system", &RandomSource::system)
      .def("bytes", &RandomSource::bytes)
      .def("uniform", &RandomSource::uniform);

  // Filters
  py::class_<PositionSet>(m, "PositionSet")
      .def(py::init<>())
      .def(py::init([](std::vector<std::uint64_t> p) { return PositionSet{std::move(p)}; }))
      .def_readwrite("positions", &PositionSet::positions)
      .def("distinct", &PositionSet::distinct);
  py::class_<BitFilter>(m, "BitFilter")
      .def(py::init<std::uint64_t>())
      .def_property_readonly("length", &BitFilter::length)
      .def("test", &BitFilter::test)
      .def("set", &BitFilter::set)
      .def("popcount", &BitFilter::popcount)
      .def("set_positions", &BitFilter::set_positions)
      .def("contains", &BitFilter::contains)
      .def("__eq__", [](const BitFilter& a, const BitFilter& b) { return a == b; });
  m.def("compress_filter", &compress_filter);
  m.def("decompress_filter", [](const Bytes& b, std::uint64_t m) { return decompress_filter(b, m); });
  m.def("compressed_size", &compressed_size, py::arg("popcount"), py::arg("m"));

  // Tokens, meta information, sealing
  m.def("make_token", &make_token, py::arg("text"), py::arg("n_bits") = kDefaultTokenBits);
  py::class_<MetaInfo>(m, "MetaInfo")
      .def(py::init<>())
      .def_readwrite("pseudonym", &MetaInfo::pseudonym)
      .def_readwrite("health", &MetaInfo::health)
      .def_readwrite("server_id", &MetaInfo::server_id)
      .def_readwrite("memory_index", &MetaInfo::memory_index)
      .def_readwrite("emergency", &MetaInfo::emergency)
      .def("keywords", &MetaInfo::keywords)
      .def("__eq__", [](const MetaInfo& a, const MetaInfo& b) { return a == b; });
  py::class_<AgentKeyPair>(m, "AgentKeyPair")
      .def_static("generate", &AgentKeyPair::generate)
      .def_property_readonly("public_key", [](const AgentKeyPair& k) { return k.public_key.bytes; });
  py::class_<SealedRecord>(m, "SealedRecord")
      .def_readonly("handle", &SealedRecord::handle)
      .def_readonly("ciphertext", &SealedRecord::ciphertext);
  m.def("open_record", &open_record, py::arg("agent"), py::arg("record"), py::arg("params"));

  // Client-side scheme
  py::class_<MasterSecrets>(m, "MasterSecrets")
      .def_readonly("params", &MasterSecrets::params)
      .def("serialize", &MasterSecrets::serialize)
      .def_static("parse", [](const Bytes& b) { return MasterSecrets::parse(b); });
  m.def(
      "setup",
      [](const SystemParams& p, const std::vector<Token>& vocab, RandomSource& rng) {
        SetupResult s = setup(p, vocab, rng);
        return py::make_tuple(s.secrets, s.agent);
      },
      py::arg("params"), py::arg("vocabulary"), py::arg("rng"));
  py::class_<UserKeyring>(m, "UserKeyring")
      .def_readonly("params", &UserKeyring::params)
      .def_readonly("zone", &UserKeyring::zone)
      .def("has", &UserKeyring::has)
      .def("serialize", &UserKeyring::serialize)
      .def_static("parse", [](const Bytes& b) { return UserKeyring::parse(b); });
  m.def(
      "register_user",
      [](const MasterSecrets& ms, const std::vector<Token>& kws, const Token& zone) {
        return register_user(ms, kws, zone);
      },
      py::arg("master"), py::arg("keywords"), py::arg("zone"));
  m.def("agent_keyring", &agent_keyring);
  m.def("keyword_positions", &keyword_positions, py::arg("keyring"), py::arg("keyword"), py::arg("location"));
  m.def(
      "build_and_query",
      [](const UserKeyring& kr, const std::vector<Token>& kws, const Token& loc, const SystemParams& p) {
        return build_and_query(kr, kws, loc, p);
      },
      py::arg("keyring"), py::arg("keywords"), py::arg("location"), py::arg("params"));

  py::class_<UserIndex>(m, "UserIndex")
      .def_readonly("zone", &UserIndex::zone)
      .def_readonly("location", &UserIndex::location)
      .def_readonly("keywords", &UserIndex::keywords)
      .def_readonly("bf", &UserIndex::bf)
      .def_readonly("obf", &UserIndex::obf)
      .def_property_readonly("blinding_left", [](const UserIndex& i) { return i.obf_elements.size(); })
      .def("serialize", &UserIndex::serialize)
      .def_static("parse", [](const Bytes& b) { return UserIndex::parse(b); });
  m.def("build_index", &build_index, py::arg("keyring"), py::arg("location"), py::arg("params"), py::arg("rng"));

  py::class_<UploadPacket>(m, "UploadPacket")
      .def_readonly("zone", &UploadPacket::zone)
      .def_readonly("sealed", &UploadPacket::sealed)
      .def_readonly("compressed_bf", &UploadPacket::compressed_bf)
      .def("filter", &UploadPacket::filter)
      .def("encode", &UploadPacket::encode)
      .def_static("decode", [](const Bytes& b, const SystemParams& p) { return UploadPacket::decode(b, p); });
  m.def(
      "make_upload_packet",
      [](const UserIndex& idx, const MetaInfo& mi, const AgentKeyPair& agent, const Token& zone,
         const SystemParams& p, RandomSource& rng) {
        return make_upload_packet(idx, mi, agent.public_key, zone, p, rng);
      },
      py::arg("index"), py::arg("meta"), py::arg("agent"), py::arg("zone"), py::arg("params"), py::arg("rng"));

  py::class_<RemovalRequest>(m, "RemovalRequest")
      .def_readonly("zone", &RemovalRequest::zone)
      .def_readonly("handle", &RemovalRequest::handle)
      .def_readonly("rbf_prime", &RemovalRequest::rbf_prime)
      .def("encode", &RemovalRequest::encode);
  py::class_<RemovalPlan>(m, "RemovalPlan")
      .def_readonly("request", &RemovalPlan::request)
      .def_readonly("updated", &RemovalPlan::updated)
      .def_readonly("swaps", &RemovalPlan::swaps);
  m.def("build_removal", &build_removal, py::arg("index"), py::arg("keyring"), py::arg("keyword"),
        py::arg("location"), py::arg("handle"), py::arg("params"), py::arg("rng"));

  // Store
  py::class_<RemoveOutcome>(m, "RemoveOutcome")
      .def_readonly("pruned", &RemoveOutcome::pruned)
      .def_readonly("dropped", &RemoveOutcome::dropped)
      .def_readonly("replacement_buffers", &RemoveOutcome::replacement_buffers)
      .def_readonly("warnings", &RemoveOutcome::warnings);
  py::class_<StorageBloomFilter>(m, "StorageBloomFilter")
      .def(py::init<const SystemParams&, Token>(), py::arg("params"), py::arg("zone"))
      .def_property_readonly("params", &StorageBloomFilter::params)
      .def_property_readonly("zone", &StorageBloomFilter::zone)
      .def("ingest", &StorageBloomFilter::ingest)
      .def("search_location", [](const StorageBloomFilter& s, const PositionSet& ps) {
        return s.search_location(ps).matches;
      })
      .def("search_filter", [](const StorageBloomFilter& s, const BitFilter& q) { return s.search_filter(q).matches; })
      .def("remove", &StorageBloomFilter::remove)
      .def("record_count", &StorageBloomFilter::record_count)
      .def("max_occupancy", &StorageBloomFilter::max_occupancy)
      .def("buffer_reads", &StorageBloomFilter::buffer_reads)
      .def("occupancy_histogram", &StorageBloomFilter::occupancy_histogram)
      .def("snapshot", &StorageBloomFilter::snapshot)
      .def_static("restore", [](const Bytes& b) { return StorageBloomFilter::restore(b); })
      .def("save_file", &StorageBloomFilter::save_file)
      .def_static("load_file", &StorageBloomFilter::load_file);

  // Analysis
  m.def("rounded_lambda", &rounded_lambda, py::arg("m"), py::arg("r"), py::arg("inserted"));
  m.def("pr_varpi", [](std::uint64_t m, std::uint64_t lambda, std::uint32_t r) { return pr_varpi(m, lambda, r); },
        py::arg("m"), py::arg("lam"), py::arg("r"));
  m.def("pr_psi",
        [](std::uint64_t m, std::uint64_t lambda, std::uint32_t r, std::uint32_t q) { return pr_psi(m, lambda, r, q); },
        py::arg("m"), py::arg("lam"), py::arg("r"), py::arg("q"));
  m.def(
      "pr_chi_bound",
      [](std::uint64_t t, std::uint64_t lambda, std::uint32_t r, std::uint32_t l, std::uint32_t g, std::uint64_t m) {
        return pr_chi_bound(t, lambda, r, l, g, m).bound;
      },
      py::arg("t"), py::arg("lam"), py::arg("r"), py::arg("l"), py::arg("gamma_count"), py::arg("m"));
  m.def("overlap_report", [](const SystemParams& p) {
    OverlapReport r = overlap_report(p);
    py::dict d;
    d["m"] = r.m;
    d["lambda"] = r.lambda;
    d["pr_varpi"] = r.pr_varpi;
    d["pr_psi"] = r.pr_psi;
    return d;
  });
  m.def("comm_overhead_upload", py::overload_cast<const SystemParams&>(&comm_overhead_upload));
  m.def("memory_model", &memory_model);
  m.def("memory_mib", [](const SystemParams& p) { return memory_model(p) / kBytesPerMiB; });

  // Simulations
  m.def(
      "run_overlap_experiment",
      [](std::uint64_t m, std::uint32_t r, std::uint32_t l, std::uint32_t g, std::vector<std::uint32_t> oe,
         std::uint64_t trials, std::uint64_t seed) {
        OverlapConfig cfg;
        cfg.m = m;
        cfg.r = r;
        cfg.l = l;
        cfg.gamma_count = g;
        cfg.oe_counts = std::move(oe);
        cfg.trials = trials;
        cfg.seed = seed;
        std::vector<ExperimentRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_overlap_experiment(cfg);
        }
        return rows_to_list(rows);
      },
      py::arg("m"), py::arg("r"), py::arg("l"), py::arg("gamma_count"), py::arg("oe_counts"), py::arg("trials"),
      py::arg("seed"));
  m.def(
      "run_overflow_experiment",
      [](const SystemParams& p, std::uint32_t users, std::vector<std::uint32_t> betas, std::uint64_t trials,
         std::uint64_t seed, const std::string& model, const std::string& keyword_counts) {
        OverflowConfig cfg;
        cfg.params = p;
        cfg.users = users;
        cfg.betas = std::move(betas);
        cfg.trials = trials;
        cfg.seed = seed;
        if (model == "uniform") {
          cfg.model = LoadModel::kUniform;
        } else if (model != "layout") {
          throw InvalidArgument("model must be 'layout' or 'uniform'");
        }
        if (keyword_counts == "fixed") {
          cfg.keyword_counts = KeywordCountModel::kFixedQ;
        } else if (keyword_counts != "uniform") {
          throw InvalidArgument("keyword_counts must be 'uniform' or 'fixed'");
        }
        std::vector<ExperimentRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_overflow_experiment(cfg);
        }
        return rows_to_list(rows);
      },
      py::arg("params"), py::arg("users"), py::arg("betas"), py::arg("trials"), py::arg("seed"),
      py::arg("model") = "layout", py::arg("keyword_counts") = "uniform");

  // Network
  py::enum_<Role>(m, "Role").value("OWNER", Role::kOwner).value("AGENT", Role::kAgent);
  py::class_<Server>(m, "Server")
      .def(py::init([](const SystemParams& p, const std::vector<Token>& zones) {
             auto reg = std::make_shared<ZoneRegistry>();
             for (const Token& z : zones) reg->add(StorageBloomFilter(p, z));
             return std::make_unique<Server>(p, reg);
           }),
           py::arg("params"), py::arg("zones"))
      .def("start", &Server::start, py::arg("host") = "127.0.0.1", py::arg("port") = 0,
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &Server::port)
      .def("stop", &Server::stop, py::call_guard<py::gil_scoped_release>());
  py::class_<RemoveAck>(m, "RemoveAck")
      .def_readonly("pruned", &RemoveAck::pruned)
      .def_readonly("dropped", &RemoveAck::dropped)
      .def_readonly("warnings", &RemoveAck::warnings);
  py::class_<Client>(m, "Client")
      .def_static("connect", &Client::connect, py::arg("host"), py::arg("port"), py::arg("role"),
                  py::arg("params"), py::arg("rng"), py::call_guard<py::gil_scoped_release>())
      .def("upload", &Client::upload, py::call_guard<py::gil_scoped_release>())
      .def("search_location", &Client::search_location, py::call_guard<py::gil_scoped_release>())
      .def("search_filter", &Client::search_filter, py::call_guard<py::gil_scoped_release>())
      .def("remove", &Client::remove, py::call_guard<py::gil_scoped_release>());
}
