#include "memmarket/client.hpp"

#include <cmath>
#include <stdexcept>

#include "memmarket/wire.hpp"

namespace mm {

std::uint16_t SecureKvClient::add_producer(std::shared_ptr<RemoteStore> store) {
  std::lock_guard lock(mu_);
  producers_.push_back(std::move(store));
  return static_cast<std::uint16_t>(producers_.size() - 1);
}

std::string SecureKvClient::remote_key(const MetadataEntry& e,
                                       const std::string& consumer_key) const {
  if (mode_ == SecurityMode::Full) {
    std::vector<std::uint8_t> k;
    wire::put_u64(k, e.substitute_key);
    return std::string(k.begin(), k.end());
  }
  return consumer_key;  // integrity-only and plain expose the original key
}

PutStatus SecureKvClient::put(const std::string& key, std::span<const std::uint8_t> value,
                              std::uint32_t* retry_after_ms) {
  std::shared_ptr<RemoteStore> store;
  std::uint16_t p_i = 0;
  {
    std::lock_guard lock(mu_);
    if (producers_.empty()) return PutStatus::NoCapacity;
    p_i = static_cast<std::uint16_t>(next_producer_++ % producers_.size());
    store = producers_[p_i];
  }

  MetadataEntry meta;
  meta.producer_index = p_i;
  std::vector<std::uint8_t> v_p;
  if (mode_ == SecurityMode::Full) {
    v_p = crypto::seal(secret_, value);  // IV || ciphertext
    meta.hash = crypto::truncated_sha256(v_p);
    meta.substitute_key = counter_.fetch_add(1);
  } else {
    v_p.assign(value.begin(), value.end());
    if (mode_ == SecurityMode::IntegrityOnly) meta.hash = crypto::truncated_sha256(v_p);
  }

  auto status = store->put(remote_key(meta, key), v_p, retry_after_ms);
  switch (status) {
    case RemoteStore::Status::Ok:
      break;
    case RemoteStore::Status::RateLimited:
      return PutStatus::RateLimited;
    case RemoteStore::Status::LeaseExpired:
    default:
      return PutStatus::NoCapacity;
  }
  std::lock_guard lock(mu_);
  index_[key] = meta;
  return PutStatus::Ok;
}

GetResult SecureKvClient::get(const std::string& key) {
  MetadataEntry meta;
  std::shared_ptr<RemoteStore> store;
  {
    std::lock_guard lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return {};
    meta = it->second;
    if (meta.producer_index >= producers_.size()) return {};
    store = producers_[meta.producer_index];
  }

  std::vector<std::uint8_t> v_p;
  auto status = store->get(remote_key(meta, key), &v_p, nullptr);
  if (status != RemoteStore::Status::Ok) {
    // evicted / missing remote values are cache semantics, not failures
    return {};
  }

  if (mode_ != SecurityMode::Plain) {
    if (crypto::truncated_sha256(v_p) != meta.hash) {
      // corrupted value: discard it and the now-useless metadata
      std::lock_guard lock(mu_);
      index_.erase(key);
      GetResult r;
      r.outcome = GetResult::Outcome::IntegrityViolation;
      return r;
    }
  }

  GetResult r;
  r.outcome = GetResult::Outcome::Found;
  if (mode_ == SecurityMode::Full) {
    try {
      r.value = crypto::open(secret_, v_p);
    } catch (const std::exception&) {
      std::lock_guard lock(mu_);
      index_.erase(key);
      r.outcome = GetResult::Outcome::IntegrityViolation;
      r.value.clear();
    }
  } else {
    r.value = std::move(v_p);
  }
  return r;
}

void SecureKvClient::del(const std::string& key) {
  MetadataEntry meta;
  std::shared_ptr<RemoteStore> store;
  {
    // local-first so a crash never leaves dangling local metadata
    std::lock_guard lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return;
    meta = it->second;
    if (meta.producer_index < producers_.size()) store = producers_[meta.producer_index];
    index_.erase(it);
  }
  if (store) store->del(remote_key(meta, key));
}

std::size_t SecureKvClient::index_size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

std::vector<std::string> SecureKvClient::keys() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  out.reserve(index_.size());
  for (const auto& [k, v] : index_) out.push_back(k);
  return out;
}

Money value_of_memory(const MissRatioCurve& mrc, double current_gb, double extra_gb,
                      Money vm_cost_per_hour, double request_rate_per_sec,
                      double remote_hit_discount) {
  double miss_now = mrc.miss_at(current_gb);
  double hit_rate = 1.0 - miss_now;
  if (hit_rate <= 0.0 || request_rate_per_sec <= 0.0) return Money{0};
  double requests_per_hour = request_rate_per_sec * 3600.0;
  double price_per_hit =
      static_cast<double>(vm_cost_per_hour.micro_cents) / (requests_per_hour * hit_rate);
  double extra_hits_per_hour =
      requests_per_hour * (miss_now - mrc.miss_at(current_gb + extra_gb));
  if (extra_hits_per_hour <= 0.0) return Money{0};
  double value = remote_hit_discount * price_per_hit * extra_hits_per_hour;
  return Money{static_cast<MicroCents>(std::floor(std::max(0.0, value)))};
}

double purchase_decision(const MissRatioCurve& mrc, Money market_price_per_gb_hour,
                         double current_gb, Money vm_cost_per_hour,
                         double request_rate_per_sec, double remote_hit_discount,
                         ByteSize slab_size) {
  double inc_gb = static_cast<double>(slab_size) / static_cast<double>(kPricingGB);
  Money inc_cost = charge_for(market_price_per_gb_hour, slab_size, Duration{kMillisPerHour});
  double leased = 0.0;
  while (current_gb + leased < mrc.max_gb()) {
    Money marginal = value_of_memory(mrc, current_gb + leased, inc_gb, vm_cost_per_hour,
                                     request_rate_per_sec, remote_hit_discount);
    if (marginal < inc_cost || marginal.micro_cents == 0) break;
    leased += inc_gb;
  }
  return leased;
}

}  // namespace mm
