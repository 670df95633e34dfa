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

#include "sbf/sbf_store.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

namespace sbf {

namespace {

constexpr std::string_view kSnapshotMagic = "SBFSTOR1";

bool sorted_contains(const std::vector<Handle>& buf, const Handle& h) {
  return std::binary_search(buf.begin(), buf.end(), h);
}

}  // namespace

StorageBloomFilter::StorageBloomFilter(const SystemParams& params, Token zone)
    : params_(params), zone_(std::move(zone)) {
  validate(params_);
  if (zone_.empty()) throw InvalidArgument("zone token is empty");
  buffers_.resize(params_.m);
}

StorageBloomFilter::StorageBloomFilter(const StorageBloomFilter& other)
    : params_(other.params_),
      zone_(other.zone_),
      buffers_(other.buffers_),
      records_(other.records_),
      buffer_reads_(other.buffer_reads_.load()) {}

StorageBloomFilter& StorageBloomFilter::operator=(const StorageBloomFilter& other) {
  if (this != &other) {
    params_ = other.params_;
    zone_ = other.zone_;
    buffers_ = other.buffers_;
    records_ = other.records_;
    buffer_reads_.store(other.buffer_reads_.load());
  }
  return *this;
}

StorageBloomFilter::StorageBloomFilter(StorageBloomFilter&& other) noexcept
    : params_(other.params_),
      zone_(std::move(other.zone_)),
      buffers_(std::move(other.buffers_)),
      records_(std::move(other.records_)),
      buffer_reads_(other.buffer_reads_.load()) {}

StorageBloomFilter& StorageBloomFilter::operator=(StorageBloomFilter&& other) noexcept {
  if (this != &other) {
    params_ = other.params_;
    zone_ = std::move(other.zone_);
    buffers_ = std::move(other.buffers_);
    records_ = std::move(other.records_);
    buffer_reads_.store(other.buffer_reads_.load());
  }
  return *this;
}

std::vector<std::uint64_t> StorageBloomFilter::validated_targets(
    const UploadPacket& packet, const std::vector<std::uint64_t>& freed,
    const Handle* released) const {
  if (packet.zone != zone_) throw InvalidArgument("upload zone does not match store zone");
  const bool reused = released != nullptr && *released == packet.sealed.handle;
  if (!reused && records_.count(packet.sealed.handle) != 0) {
    throw InvalidArgument("record handle already stored");
  }
  BitFilter bf = packet.filter(params_);
  if (bf.length() != params_.m) throw InvalidArgument("upload filter length differs from m");
  std::vector<std::uint64_t> targets = bf.set_positions();
  if (targets.empty()) throw InvalidArgument("upload filter has no set bits");
  for (std::uint64_t pos : targets) {
    std::size_t occupancy = buffers_[pos].size();
    if (std::binary_search(freed.begin(), freed.end(), pos)) --occupancy;
    if (occupancy >= params_.beta) {
      throw CapacityError("buffer " + std::to_string(pos) + " is full", pos);
    }
  }
  return targets;
}

void StorageBloomFilter::apply_ingest(const UploadPacket& packet,
                                      const std::vector<std::uint64_t>& targets) {
  const Handle& h = packet.sealed.handle;
  for (std::uint64_t pos : targets) {
    auto& buf = buffers_[pos];
    buf.insert(std::lower_bound(buf.begin(), buf.end(), h), h);
  }
  records_.emplace(h, Entry{packet.sealed, static_cast<std::uint32_t>(targets.size())});
}

std::size_t StorageBloomFilter::ingest(const UploadPacket& packet) {
  std::vector<std::uint64_t> targets = validated_targets(packet, {}, nullptr);
  // Reserve first so a bad_alloc cannot leave a partial write behind.
  for (std::uint64_t pos : targets) buffers_[pos].reserve(buffers_[pos].size() + 1);
  records_.reserve(records_.size() + 1);
  apply_ingest(packet, targets);
  return targets.size();
}

SearchResult StorageBloomFilter::intersect(const std::vector<std::uint64_t>& positions) const {
  SearchResult result;
  buffer_reads_.fetch_add(positions.size());
  std::vector<const std::vector<Handle>*> bufs;
  bufs.reserve(positions.size());
  for (std::uint64_t pos : positions) {
    bufs.push_back(&buffers_[pos]);
    result.buffer_cardinalities.push_back(buffers_[pos].size());
  }
  std::sort(bufs.begin(), bufs.end(),
            [](const auto* a, const auto* b) { return a->size() < b->size(); });
  if (bufs.empty() || bufs.front()->empty()) return result;

  std::vector<Handle> acc = *bufs.front();
  std::vector<Handle> next;
  for (std::size_t i = 1; i < bufs.size() && !acc.empty(); ++i) {
    next.clear();
    std::set_intersection(acc.begin(), acc.end(), bufs[i]->begin(), bufs[i]->end(),
                          std::back_inserter(next));
    acc.swap(next);
  }
  result.matches.reserve(acc.size());
  for (const Handle& h : acc) result.matches.push_back(records_.at(h).record);
  return result;
}

SearchResult StorageBloomFilter::search_location(const PositionSet& ps) const {
  std::vector<std::uint64_t> positions = ps.distinct();
  for (std::uint64_t pos : positions) {
    if (pos >= params_.m) throw InvalidArgument("search position out of range");
  }
  return intersect(positions);
}

SearchResult StorageBloomFilter::search_filter(const BitFilter& query) const {
  if (query.length() != params_.m) throw InvalidArgument("query filter length differs from m");
  std::vector<std::uint64_t> positions = query.set_positions();
  if (positions.empty()) throw InvalidArgument("query filter is all zero");
  return intersect(positions);
}

RemoveOutcome StorageBloomFilter::remove(const RemovalRequest& request) {
  if (request.zone != zone_) throw InvalidArgument("removal zone does not match store zone");
  if (request.rbf_prime.length() != params_.m) {
    throw InvalidArgument("removal filter length differs from m");
  }
  auto it = records_.find(request.handle);
  if (it == records_.end()) throw NotFound("removal handle is not stored");

  RemoveOutcome out;
  std::vector<std::uint64_t> prune;
  for (std::uint64_t pos : request.rbf_prime.set_positions()) {
    if (sorted_contains(buffers_[pos], request.handle)) {
      prune.push_back(pos);
    } else {
      out.warnings.push_back("buffer " + std::to_string(pos) + " does not hold the record");
    }
  }
  const bool drops = prune.size() == it->second.refs;

  std::vector<std::uint64_t> targets;
  if (request.replacement) {
    // Validate against the post-prune state so the whole request is atomic.
    const Handle* released = drops ? &request.handle : nullptr;
    targets = validated_targets(*request.replacement, prune, released);
  }

  for (std::uint64_t pos : prune) {
    auto& buf = buffers_[pos];
    buf.erase(std::lower_bound(buf.begin(), buf.end(), request.handle));
  }
  out.pruned = prune.size();
  it->second.refs -= static_cast<std::uint32_t>(prune.size());
  if (it->second.refs == 0) {
    records_.erase(it);
    out.dropped = true;
  }
  if (request.replacement) {
    apply_ingest(*request.replacement, targets);
    out.replacement_buffers = targets.size();
  }
  return out;
}

MemoryUsage StorageBloomFilter::memory_usage() const {
  MemoryUsage mu;
  mu.model_bytes = static_cast<double>(params_.m) * static_cast<double>(params_.beta) *
                   static_cast<double>(params_.tau_bits) / 8.0;
  for (const auto& buf : buffers_) mu.actual_entries += buf.size();
  return mu;
}

std::map<std::size_t, std::uint64_t> StorageBloomFilter::occupancy_histogram() const {
  std::map<std::size_t, std::uint64_t> hist;
  for (const auto& buf : buffers_) ++hist[buf.size()];
  return hist;
}

std::size_t StorageBloomFilter::max_occupancy() const {
  std::size_t best = 0;
  for (const auto& buf : buffers_) best = std::max(best, buf.size());
  return best;
}

const std::vector<Handle>& StorageBloomFilter::buffer(std::uint64_t position) const {
  if (position >= buffers_.size()) throw InvalidArgument("buffer position out of range");
  return buffers_[position];
}

Bytes StorageBloomFilter::snapshot() const {
  ByteWriter w;
  w.raw(as_bytes(kSnapshotMagic));
  encode_params(w, params_);
  w.blob8(zone_);

  std::vector<Handle> handles;
  handles.reserve(records_.size());
  for (const auto& [h, _] : records_) handles.push_back(h);
  std::sort(handles.begin(), handles.end());
  w.u64(handles.size());
  for (const Handle& h : handles) {
    w.raw(h);
    w.blob32(records_.at(h).record.ciphertext);
  }

  std::uint64_t non_empty = 0;
  for (const auto& buf : buffers_) non_empty += buf.empty() ? 0 : 1;
  w.u64(non_empty);
  for (std::uint64_t pos = 0; pos < buffers_.size(); ++pos) {
    const auto& buf = buffers_[pos];
    if (buf.empty()) continue;
    w.u64(pos);
    w.u32(static_cast<std::uint32_t>(buf.size()));
    for (const Handle& h : buf) w.raw(h);
  }
  return std::move(w).take();
}

StorageBloomFilter StorageBloomFilter::restore(ByteView bytes) {
  ByteReader r(bytes);
  ByteView magic = r.raw(kSnapshotMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kSnapshotMagic.begin())) {
    throw FormatError("not a store snapshot");
  }
  SystemParams params = decode_params(r);
  Token zone = r.blob8();
  if (zone.empty()) throw FormatError("snapshot zone is empty");
  StorageBloomFilter store(params, zone);

  std::uint64_t n_records = r.u64();
  if (n_records > r.remaining() / (kHandleBytes + 4)) throw FormatError("record count too large");
  std::optional<Handle> prev;
  for (std::uint64_t i = 0; i < n_records; ++i) {
    SealedRecord rec;
    rec.handle = r.array<kHandleBytes>();
    rec.ciphertext = r.blob32();
    if (prev && !(*prev < rec.handle)) throw FormatError("snapshot records not strictly ascending");
    prev = rec.handle;
    store.records_.emplace(rec.handle, Entry{std::move(rec), 0});
  }

  std::uint64_t n_buffers = r.u64();
  if (n_buffers > params.m) throw FormatError("snapshot lists more buffers than m");
  std::optional<std::uint64_t> prev_pos;
  for (std::uint64_t i = 0; i < n_buffers; ++i) {
    std::uint64_t pos = r.u64();
    if (pos >= params.m) throw FormatError("snapshot buffer position out of range");
    if (prev_pos && pos <= *prev_pos) throw FormatError("snapshot buffers not ascending");
    prev_pos = pos;
    std::uint32_t count = r.u32();
    if (count == 0) throw FormatError("snapshot lists an empty buffer");
    if (count > params.beta) throw FormatError("snapshot buffer exceeds beta");
    auto& buf = store.buffers_[pos];
    buf.reserve(count);
    for (std::uint32_t j = 0; j < count; ++j) {
      Handle h = r.array<kHandleBytes>();
      if (!buf.empty() && !(buf.back() < h)) throw FormatError("snapshot buffer not sorted");
      auto it = store.records_.find(h);
      if (it == store.records_.end()) throw FormatError("snapshot buffer names an unknown record");
      ++it->second.refs;
      buf.push_back(h);
    }
  }
  r.expect_end("store snapshot");
  for (const auto& [h, e] : store.records_) {
    if (e.refs == 0) throw FormatError("snapshot record is in no buffer");
  }
  return store;
}

void StorageBloomFilter::save_file(const std::string& path) const {
  Bytes data = snapshot();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed for " + path);
}

StorageBloomFilter StorageBloomFilter::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return restore(data);
}

// ---------------------------------------------------------------------------

void ZoneRegistry::add(StorageBloomFilter store) {
  std::unique_lock lock(mu_);
  Token zone = store.zone();
  if (slots_.count(zone) != 0) throw InvalidArgument("zone already registered");
  slots_.emplace(std::move(zone), std::make_unique<Slot>(std::move(store)));
}

bool ZoneRegistry::contains(const Token& zone) const {
  std::shared_lock lock(mu_);
  return slots_.count(zone) != 0;
}

std::vector<Token> ZoneRegistry::zones() const {
  std::shared_lock lock(mu_);
  std::vector<Token> out;
  for (const auto& [z, _] : slots_) out.push_back(z);
  return out;
}

ZoneRegistry::Slot& ZoneRegistry::find(const Token& zone) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(zone);
  if (it == slots_.end()) throw NotFound("unknown zone");
  return *it->second;
}

}  // namespace sbf
