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

#ifndef SBF_SBF_STORE_H_
#define SBF_SBF_STORE_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "sbf/bytes.h"
#include "sbf/crypto_envelope.h"
#include "sbf/errors.h"
#include "sbf/filters.h"
#include "sbf/params.h"
#include "sbf/secure_index.h"

namespace sbf {

struct SearchResult {
  std::vector<SealedRecord> matches;
  // Occupancy of each addressed buffer, ascending by position. Local
  // diagnostics only; never sent to clients.
  std::vector<std::size_t> buffer_cardinalities;
};

struct RemoveOutcome {
  std::size_t pruned = 0;
  bool dropped = false;  // record left no buffer and was deleted
  std::size_t replacement_buffers = 0;
  std::vector<std::string> warnings;
};

struct MemoryUsage {
  double model_bytes = 0;          // m * beta * tau / 8, the provisioned capacity
  std::uint64_t actual_entries = 0;  // handles held across all buffers
};

inline constexpr double kBytesPerMiB = 1024.0 * 1024.0;

// Storage Bloom filter for one zone: m buffers of record handles, each
// holding at most beta, over a shared table of sealed records.
//
// Not synchronised; ZoneRegistry provides the readers-writer wrapper.
class StorageBloomFilter {
 public:
  StorageBloomFilter(const SystemParams& params, Token zone);
  StorageBloomFilter(const StorageBloomFilter& other);
  StorageBloomFilter& operator=(const StorageBloomFilter& other);
  StorageBloomFilter(StorageBloomFilter&& other) noexcept;
  StorageBloomFilter& operator=(StorageBloomFilter&& other) noexcept;

  const SystemParams& params() const { return params_; }
  const Token& zone() const { return zone_; }

  // Stores the record once and appends its handle to every buffer whose bit
  // is set. All-or-nothing: throws CapacityError naming the first full
  // buffer, InvalidArgument on a zone mismatch, duplicate handle or empty
  // filter, and leaves the store untouched.
  std::size_t ingest(const UploadPacket& packet);

  // Records present in all addressed buffers, smallest buffer first.
  SearchResult search_location(const PositionSet& ps) const;
  // AND across every set bit. Throws InvalidArgument on an all-zero query.
  SearchResult search_filter(const BitFilter& query) const;

  // Deletes the handle from the buffers marked in RBF'. Buffers that do not
  // hold the handle produce a warning. Throws NotFound for an unknown handle.
  RemoveOutcome remove(const RemovalRequest& request);

  MemoryUsage memory_usage() const;
  // occupancy -> number of buffers with that occupancy; sums to m.
  std::map<std::size_t, std::uint64_t> occupancy_histogram() const;
  std::size_t max_occupancy() const;

  std::size_t record_count() const { return records_.size(); }
  bool has_record(const Handle& h) const { return records_.count(h) != 0; }
  const std::vector<Handle>& buffer(std::uint64_t position) const;

  // Buffers consulted by searches since construction.
  std::uint64_t buffer_reads() const { return buffer_reads_.load(); }

  // Snapshot: "SBFSTOR1", parameter block, blob8 zone, u64 record count,
  // records (handle, u32 length, ciphertext) ascending by handle, u64
  // non-empty buffer count, buffers (u64 position, u32 count, handles)
  // ascending by position.
  Bytes snapshot() const;
  // Validates every store invariant; throws FormatError on violation.
  static StorageBloomFilter restore(ByteView bytes);
  void save_file(const std::string& path) const;
  static StorageBloomFilter load_file(const std::string& path);

 private:
  struct Entry {
    SealedRecord record;
    std::uint32_t refs = 0;
  };

  SearchResult intersect(const std::vector<std::uint64_t>& positions) const;
  std::vector<std::uint64_t> validated_targets(const UploadPacket& packet,
                                               const std::vector<std::uint64_t>& freed,
                                               const Handle* released) const;
  void apply_ingest(const UploadPacket& packet, const std::vector<std::uint64_t>& targets);

  SystemParams params_;
  Token zone_;
  std::vector<std::vector<Handle>> buffers_;  // each sorted ascending
  std::unordered_map<Handle, Entry, HandleHash> records_;
  mutable std::atomic<std::uint64_t> buffer_reads_{0};
};

// Central server state: one store per zone with a readers-writer lock each.
// Concurrent searches share a zone; ingest and remove are exclusive per
// zone; different zones never block each other.
class ZoneRegistry {
 public:
  // Throws InvalidArgument if the zone already exists.
  void add(StorageBloomFilter store);
  bool contains(const Token& zone) const;
  std::vector<Token> zones() const;

  template <typename F>
  auto read(const Token& zone, F&& f) const {
    const Slot& slot = find(zone);
    std::shared_lock lock(slot.mu);
    return f(static_cast<const StorageBloomFilter&>(slot.store));
  }

  template <typename F>
  auto write(const Token& zone, F&& f) {
    Slot& slot = find(zone);
    std::unique_lock lock(slot.mu);
    return f(slot.store);
  }

 private:
  struct Slot {
    explicit Slot(StorageBloomFilter s) : store(std::move(s)) {}
    mutable std::shared_mutex mu;
    StorageBloomFilter store;
  };

  Slot& find(const Token& zone) const;

  mutable std::shared_mutex mu_;
  std::map<Token, std::unique_ptr<Slot>> slots_;
};

}  // namespace sbf

#endif  // SBF_SBF_STORE_H_
