#include "memmarket/store.hpp"

#include <algorithm>
#include <stdexcept>

namespace mm {

TokenBucket::Admit TokenBucket::admit(ByteSize io_size, Instant now) {
  Millis dt = now.ms - last_refill_.ms;
  if (dt > 0) {
    milli_tokens_ = std::min<std::uint64_t>(burst_ * 1000, milli_tokens_ + rate_ * dt);
    last_refill_ = now;
  }
  if (io_size * 1000 > milli_tokens_) return Admit::Deny;
  milli_tokens_ -= io_size * 1000;
  return Admit::Allow;
}

ProducerStore::ProducerStore(StoreConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.lru_sample_size == 0) throw std::invalid_argument("lru_sample_size must be positive");
}

void ProducerStore::touch_pages(std::uint64_t offset, std::size_t len, int delta) {
  if (len == 0) return;
  std::uint64_t first = offset / kPageSize;
  std::uint64_t last = (offset + len - 1) / kPageSize;
  for (std::uint64_t pg = first; pg <= last; ++pg) {
    auto& rc = page_refs_[pg];
    if (delta > 0) {
      if (rc == 0) ++live_pages_;
      ++rc;
    } else {
      if (--rc == 0) {
        --live_pages_;
        page_refs_.erase(pg);
      }
    }
  }
}

std::uint64_t ProducerStore::arena_alloc(std::size_t len) {
  std::uint64_t off = arena_next_;
  arena_next_ += len;
  return off;
}

void ProducerStore::remove_entry(std::unordered_map<std::string, Entry>::iterator it) {
  Entry& e = it->second;
  occupancy_ -= footprint(e);
  touch_pages(e.arena_offset, e.value.size(), -1);
  // swap-remove from the sampling vector
  std::size_t slot = e.key_slot;
  if (slot + 1 != keys_.size()) {
    keys_[slot] = std::move(keys_.back());
    entries_.at(keys_[slot]).key_slot = slot;
  }
  keys_.pop_back();
  entries_.erase(it);
}

std::string ProducerStore::pick_victim() {
  // Sample lru_sample_size distinct entries, evict the least recent.
  std::size_t n = keys_.size();
  std::size_t k = std::min<std::size_t>(cfg_.lru_sample_size, n);
  // partial Fisher-Yates over an index view
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const Entry* best = nullptr;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> dist(i, n - 1);
    std::swap(idx[i], idx[dist(rng_)]);
    const Entry& e = entries_.at(keys_[idx[i]]);
    if (!best || e.last_access < best->last_access ||
        (e.last_access == best->last_access && e.access_seq < best->access_seq)) {
      best = &e;
      best_i = idx[i];
    }
  }
  return keys_[best_i];
}

std::vector<std::string> ProducerStore::put(const std::string& key,
                                            std::vector<std::uint8_t> value, Instant now) {
  if (value.size() + cfg_.value_overhead > cfg_.capacity)
    throw std::invalid_argument("value larger than store capacity");

  auto it = entries_.find(key);
  if (it != entries_.end()) {
    Entry& e = it->second;
    occupancy_ -= footprint(e);
    touch_pages(e.arena_offset, e.value.size(), -1);
    e.arena_offset = arena_alloc(value.size());
    touch_pages(e.arena_offset, value.size(), +1);
    e.value = std::move(value);
    e.last_access = now;
    e.access_seq = ++access_counter_;
    occupancy_ += footprint(e);
  } else {
    Entry e;
    e.arena_offset = arena_alloc(value.size());
    touch_pages(e.arena_offset, value.size(), +1);
    e.value = std::move(value);
    e.last_access = now;
    e.access_seq = ++access_counter_;
    e.key_slot = keys_.size();
    occupancy_ += footprint(e);
    keys_.push_back(key);
    entries_.emplace(key, std::move(e));
  }

  std::vector<std::string> evicted;
  while (occupancy_ > cfg_.capacity && entries_.size() > 1) {
    std::string victim = pick_victim();
    if (victim == key) {
      // never evict the key just written; resample among the rest
      if (entries_.size() == 1) break;
      continue;
    }
    evicted.push_back(victim);
    remove_entry(entries_.find(victim));
    ++stats_.evictions;
  }
  return evicted;
}

std::optional<std::vector<std::uint8_t>> ProducerStore::get(const std::string& key, Instant now) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++stats_.misses;
    return std::nullopt;
  }
  ++stats_.hits;
  it->second.last_access = now;
  it->second.access_seq = ++access_counter_;
  return it->second.value;
}

bool ProducerStore::erase(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  remove_entry(it);
  return true;
}

std::vector<std::string> ProducerStore::evict_bytes(ByteSize bytes,
                                                    std::vector<std::string>* out) {
  std::vector<std::string> local;
  std::vector<std::string>& evicted = out ? *out : local;
  ByteSize freed = 0;
  while (freed < bytes && !entries_.empty()) {
    std::string victim = pick_victim();
    auto it = entries_.find(victim);
    freed += footprint(it->second);
    evicted.push_back(victim);
    remove_entry(it);
    ++stats_.evictions;
  }
  return evicted;
}

ByteSize ProducerStore::defragment() {
  ByteSize before = resident();
  page_refs_.clear();
  live_pages_ = 0;
  arena_next_ = 0;
  // repack in access_seq order; any stable order compacts equally well
  std::vector<std::pair<std::uint64_t, std::string>> order;
  order.reserve(entries_.size());
  for (const auto& [k, e] : entries_) order.emplace_back(e.access_seq, k);
  std::sort(order.begin(), order.end());
  for (const auto& [seq, k] : order) {
    Entry& e = entries_.at(k);
    e.arena_offset = arena_alloc(e.value.size());
    touch_pages(e.arena_offset, e.value.size(), +1);
  }
  ByteSize after = resident();
  return before > after ? before - after : 0;
}

std::string ProducerStore::csv_line(const std::string& store_id) const {
  return store_id + "," + std::to_string(occupancy_) + "," + std::to_string(resident()) + "," +
         std::to_string(stats_.evictions);
}

ProducerStore& StoreManager::spawn_store(const LeaseBinding& lease) {
  if (stores_.count(lease.lease_id)) throw std::invalid_argument("duplicate lease");
  if (lease.slabs > free_slabs_) throw std::invalid_argument("not enough free slabs");
  StoreConfig cfg;
  cfg.capacity = static_cast<ByteSize>(lease.slabs) * kSlabSize;
  cfg.seed = seed_ ^ lease.lease_id;
  Bound b{lease, ProducerStore(cfg), std::nullopt};
  if (lease.bandwidth_limit > 0)
    b.bucket.emplace(lease.bandwidth_limit, lease.bandwidth_limit, now_);
  free_slabs_ -= lease.slabs;
  auto [it, ok] = stores_.emplace(lease.lease_id, std::move(b));
  return it->second.store;
}

void StoreManager::terminate_store(std::uint64_t lease_id) {
  auto it = stores_.find(lease_id);
  if (it == stores_.end()) throw std::invalid_argument("unknown lease");
  free_slabs_ += it->second.lease.slabs;
  stores_.erase(it);
}

ProducerStore* StoreManager::store_for(std::uint64_t lease_id) {
  auto it = stores_.find(lease_id);
  return it == stores_.end() ? nullptr : &it->second.store;
}

const LeaseBinding* StoreManager::lease_for(std::uint64_t lease_id) const {
  auto it = stores_.find(lease_id);
  return it == stores_.end() ? nullptr : &it->second.lease;
}

TokenBucket* StoreManager::bucket_for(std::uint64_t lease_id) {
  auto it = stores_.find(lease_id);
  if (it == stores_.end() || !it->second.bucket) return nullptr;
  return &*it->second.bucket;
}

std::vector<ReclaimReport> StoreManager::reclaim(ByteSize total_bytes) {
  std::vector<ReclaimReport> reports;
  if (total_bytes == 0 || stores_.empty()) return reports;

  ByteSize total_occupancy = 0;
  for (const auto& [id, b] : stores_) total_occupancy += b.store.occupancy();
  if (total_occupancy == 0) return reports;
  total_bytes = std::min(total_bytes, total_occupancy);

  // floor split + largest remainder so the targets sum to total_bytes
  struct Share {
    std::uint64_t lease_id;
    ByteSize target;
    ByteSize remainder;
  };
  std::vector<Share> shares;
  ByteSize assigned = 0;
  for (const auto& [id, b] : stores_) {
    unsigned __int128 num = static_cast<unsigned __int128>(total_bytes) * b.store.occupancy();
    ByteSize target = static_cast<ByteSize>(num / total_occupancy);
    ByteSize rem = static_cast<ByteSize>(num % total_occupancy);
    shares.push_back({id, target, rem});
    assigned += target;
  }
  std::stable_sort(shares.begin(), shares.end(),
                   [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
  for (std::size_t i = 0; i < shares.size() && assigned < total_bytes; ++i, ++assigned)
    ++shares[i].target;

  for (const auto& s : shares) {
    if (s.target == 0) continue;
    Bound& b = stores_.at(s.lease_id);
    ReclaimReport r;
    r.lease_id = s.lease_id;
    b.store.evict_bytes(s.target, &r.evicted_keys);
    // return fully-emptied slabs to the pool and shrink the store
    std::uint32_t needed =
        static_cast<std::uint32_t>(slabs_needed(std::max<ByteSize>(b.store.occupancy(), 1), kSlabSize));
    if (needed < b.lease.slabs) {
      r.slabs_returned = b.lease.slabs - needed;
      b.lease.slabs = needed;
      b.store.set_capacity(static_cast<ByteSize>(needed) * kSlabSize);
      free_slabs_ += r.slabs_returned;
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<std::uint64_t> StoreManager::active_leases() const {
  std::vector<std::uint64_t> ids;
  for (const auto& [id, b] : stores_) ids.push_back(id);
  return ids;
}

}  // namespace mm
