#include "memmarket/broker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mm {

std::vector<double> placement_costs(const std::vector<CandidateMetrics>& candidates,
                                    const PlacementWeights& weights) {
  const std::size_t n = candidates.size();
  std::vector<double> costs(n, 0.0);
  if (n == 0) return costs;

  auto norm_term = [&](auto getter) {
    double lo = getter(candidates[0]), hi = lo;
    for (const auto& c : candidates) {
      lo = std::min(lo, getter(c));
      hi = std::max(hi, getter(c));
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = (hi - lo) < 1e-12 ? 0.5 : (getter(candidates[i]) - lo) / (hi - lo);
    return out;
  };

  auto slabs = norm_term([](const CandidateMetrics& c) { return c.slabs_available; });
  auto avail = norm_term([](const CandidateMetrics& c) { return c.predicted_availability; });
  auto bw = norm_term([](const CandidateMetrics& c) { return c.bandwidth; });
  auto cpu = norm_term([](const CandidateMetrics& c) { return c.cpu; });
  auto lat = norm_term([](const CandidateMetrics& c) { return c.latency_ms; });
  auto rep = norm_term([](const CandidateMetrics& c) { return c.reputation; });

  for (std::size_t i = 0; i < n; ++i) {
    costs[i] = weights.slabs * (1.0 - slabs[i]) + weights.availability * (1.0 - avail[i]) +
               weights.bandwidth * (1.0 - bw[i]) + weights.cpu * (1.0 - cpu[i]) +
               weights.latency * lat[i] + weights.reputation * (1.0 - rep[i]);
  }
  return costs;
}

std::uint64_t Broker::register_producer(const std::string& endpoint,
                                        std::uint32_t offered_slabs) {
  if (endpoint.empty()) throw std::invalid_argument("empty endpoint");
  if (endpoints_.count(endpoint)) throw std::invalid_argument("endpoint already registered");
  std::uint64_t id = next_id_++;
  ProducerLedgerEntry e;
  e.producer_id = id;
  e.endpoint = endpoint;
  e.offered_slabs = offered_slabs;
  producers_.emplace(id, std::move(e));
  endpoints_.emplace(endpoint, id);
  predictors_.emplace(id, AvailabilityPredictor{});
  return id;
}

std::uint64_t Broker::register_consumer(const std::string& endpoint) {
  if (endpoint.empty()) throw std::invalid_argument("empty endpoint");
  if (endpoints_.count(endpoint)) throw std::invalid_argument("endpoint already registered");
  std::uint64_t id = next_id_++;
  consumers_.emplace(id, endpoint);
  endpoints_.emplace(endpoint, id);
  return id;
}

void Broker::deregister(std::uint64_t id) {
  // reputation does not survive deregistration; a fresh registration starts
  // clean (the gaming risk is accepted, see project notes)
  if (auto it = producers_.find(id); it != producers_.end()) {
    endpoints_.erase(it->second.endpoint);
    producers_.erase(it);
    predictors_.erase(id);
    return;
  }
  if (auto it = consumers_.find(id); it != consumers_.end()) {
    endpoints_.erase(it->second);
    consumers_.erase(it);
    return;
  }
  throw std::invalid_argument("unknown id");
}

void Broker::report_usage(std::uint64_t producer_id, double free_gb, double bw, double cpu,
                          Instant at) {
  auto it = producers_.find(producer_id);
  if (it == producers_.end()) throw std::invalid_argument("unknown producer");
  auto& e = it->second;
  if (!e.usage_history.values.empty() && at < e.usage_history.end())
    throw std::invalid_argument("non-monotone usage report");
  if (e.usage_history.values.empty()) e.usage_history.start = at;
  e.usage_history.values.push_back(free_gb);
  e.available_bw = bw;
  e.available_cpu = cpu;
}

void Broker::set_latency(std::uint64_t producer_id, std::uint64_t consumer_id, Duration rtt) {
  auto it = producers_.find(producer_id);
  if (it == producers_.end()) throw std::invalid_argument("unknown producer");
  it->second.latency_to[consumer_id] = rtt;
}

double Broker::predicted_free_slabs(std::uint64_t producer_id, Duration lease, Instant now) {
  auto it = producers_.find(producer_id);
  if (it == producers_.end()) return 0.0;
  const auto& hist = it->second.usage_history;
  if (hist.values.empty()) return 0.0;
  double free_gb = predictors_.at(producer_id).predict_min_free(hist, lease, now);
  return free_gb * static_cast<double>(kPricingGB) / static_cast<double>(cfg_.slab_size);
}

std::uint32_t Broker::free_slabs(std::uint64_t producer_id) const {
  auto it = producers_.find(producer_id);
  if (it == producers_.end()) return 0;
  const auto& e = it->second;
  return e.offered_slabs > e.leased_slabs ? e.offered_slabs - e.leased_slabs : 0;
}

Broker::TryResult Broker::try_assign(const AllocationRequest& request, std::uint32_t want,
                                     Instant now) {
  // Eligible producers: at least one slab predicted free for the whole
  // lease, at least one unleased slab, within latency bound.
  struct Cand {
    std::uint64_t id;
    std::uint32_t can_take;
  };
  std::vector<CandidateMetrics> metrics;
  std::vector<Cand> cands;
  for (auto& [id, e] : producers_) {
    std::uint32_t unleased = free_slabs(id);
    if (unleased == 0) continue;
    double predicted = predicted_free_slabs(id, request.terms.duration, now);
    if (predicted < 1.0) continue;
    if (request.terms.latency_bound.ms > 0) {
      auto lit = e.latency_to.find(request.consumer_id);
      if (lit != e.latency_to.end() && lit->second > request.terms.latency_bound) continue;
    }
    std::uint32_t can_take =
        std::min<std::uint32_t>(unleased, static_cast<std::uint32_t>(predicted));
    if (can_take == 0) continue;
    CandidateMetrics m;
    m.producer_id = id;
    m.slabs_available = unleased;
    m.predicted_availability = predicted;
    m.bandwidth = e.available_bw;
    m.cpu = e.available_cpu;
    auto lit = e.latency_to.find(request.consumer_id);
    m.latency_ms = lit == e.latency_to.end() ? 0.0 : static_cast<double>(lit->second.ms);
    m.reputation = e.reputation();
    metrics.push_back(m);
    cands.push_back({id, can_take});
  }

  auto costs = placement_costs(metrics, request.terms.weights);
  std::vector<std::size_t> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    return cands[a].id < cands[b].id;  // deterministic tie-break
  });

  TryResult tr;
  std::uint32_t remaining = want;
  for (std::size_t i : order) {
    if (remaining == 0) break;
    std::uint32_t take = std::min(remaining, cands[i].can_take);
    AssignmentPart part;
    part.producer_id = cands[i].id;
    auto& e = producers_.at(cands[i].id);
    for (std::uint32_t k = 0; k < take; ++k) part.slab_indices.push_back(e.next_slab_index + k);
    tr.parts.push_back(std::move(part));
    remaining -= take;
    tr.assigned += take;
  }
  return tr;
}

void Broker::commit_parts(const std::vector<AssignmentPart>& parts) {
  for (const auto& p : parts) {
    auto& e = producers_.at(p.producer_id);
    e.leased_slabs += static_cast<std::uint32_t>(p.slab_indices.size());
    e.next_slab_index += static_cast<std::uint32_t>(p.slab_indices.size());
  }
}

Assignment Broker::finish_assignment(const AllocationRequest& request, TryResult&& tr,
                                     Instant now) {
  commit_parts(tr.parts);
  Assignment a;
  a.lease_id = next_lease_id_++;
  a.consumer_id = request.consumer_id;
  a.parts = std::move(tr.parts);
  a.start = now;
  a.end = now + request.terms.duration;
  a.unit_price = current_price_;

  LeaseRecord rec;
  rec.assignment = a;
  rec.requested_duration = request.terms.duration;
  leases_.emplace(a.lease_id, std::move(rec));

  // each assigned slab*duration enters the reputation denominator now
  for (const auto& p : a.parts) {
    auto& e = producers_.at(p.producer_id);
    e.leased_slab_ms += p.slab_indices.size() * static_cast<std::uint64_t>(request.terms.duration.ms);
  }
  return a;
}

AllocateResult Broker::allocate(const AllocationRequest& request, Instant now) {
  if (!consumers_.count(request.consumer_id))
    return {AllocateResult::Kind::Rejected, std::nullopt, "unknown consumer"};
  if (request.terms.slabs == 0)
    return {AllocateResult::Kind::Rejected, std::nullopt, "zero-slab request"};
  if (request.terms.min_slabs == 0 || request.terms.min_slabs > request.terms.slabs)
    return {AllocateResult::Kind::Rejected, std::nullopt, "invalid min_slabs"};
  if (request.terms.max_unit_price.micro_cents > 0 &&
      current_price_ > request.terms.max_unit_price)
    return queue_request(request, request.terms.slabs, request.terms.min_slabs, now);

  TryResult tr = try_assign(request, request.terms.slabs, now);
  if (tr.assigned < request.terms.min_slabs)
    return queue_request(request, request.terms.slabs, request.terms.min_slabs, now);

  std::uint32_t shortfall = request.terms.slabs - tr.assigned;
  Assignment a = finish_assignment(request, std::move(tr), now);
  if (shortfall > 0) {
    PendingRequest pr;
    pr.request = request;
    pr.remaining_slabs = shortfall;
    pr.min_slabs = 1;  // the minimum was already met
    pr.enqueued_at = now;
    pr.timeout = cfg_.queue_timeout;
    queue_.push_back(pr);
  }
  return {AllocateResult::Kind::Assigned, a, ""};
}

AllocateResult Broker::queue_request(const AllocationRequest& request, std::uint32_t slabs,
                                     std::uint32_t min_slabs, Instant now) {
  PendingRequest pr;
  pr.request = request;
  pr.remaining_slabs = slabs;
  pr.min_slabs = min_slabs;
  pr.enqueued_at = now;
  pr.timeout = cfg_.queue_timeout;
  queue_.push_back(pr);
  return {AllocateResult::Kind::Queued, std::nullopt, ""};
}

std::vector<Assignment> Broker::tick_queue(Instant now) {
  std::vector<Assignment> made;
  std::deque<PendingRequest> keep;
  // FIFO scan, non-blocking: later requests may succeed when earlier ones
  // cannot.
  while (!queue_.empty()) {
    PendingRequest pr = std::move(queue_.front());
    queue_.pop_front();
    if ((now - pr.enqueued_at).ms > pr.timeout.ms) continue;  // expired, dropped
    TryResult tr = try_assign(pr.request, pr.remaining_slabs, now);
    if (tr.assigned < pr.min_slabs || tr.assigned == 0) {
      keep.push_back(std::move(pr));
      continue;
    }
    std::uint32_t shortfall = pr.remaining_slabs - tr.assigned;
    AllocationRequest req = pr.request;
    req.terms.slabs = pr.remaining_slabs;
    Assignment a = finish_assignment(req, std::move(tr), now);
    made.push_back(a);
    if (shortfall > 0) {
      pr.remaining_slabs = shortfall;
      pr.min_slabs = 1;
      keep.push_back(std::move(pr));
    }
  }
  queue_ = std::move(keep);
  return made;
}

void Broker::record_eviction(std::uint64_t lease_id, std::uint64_t producer_id,
                             std::uint32_t slabs, Instant at) {
  auto it = leases_.find(lease_id);
  if (it == leases_.end()) throw std::invalid_argument("unknown lease");
  auto& rec = it->second;
  Instant end = rec.assignment.end;
  Millis remaining = std::max<Millis>(0, end.ms - at.ms);
  auto pit = producers_.find(producer_id);
  if (pit != producers_.end()) {
    pit->second.unhonored_slab_ms += static_cast<std::uint64_t>(slabs) * remaining;
    pit->second.leased_slabs =
        pit->second.leased_slabs > slabs ? pit->second.leased_slabs - slabs : 0;
  }
  rec.evictions.push_back({producer_id, slabs, at});
}

Bill Broker::bill(const LeaseRecord& lease, Money unit_price, double rebate_rate,
                  ByteSize slab_size) {
  const auto& a = lease.assignment;
  std::uint64_t duration_ms = static_cast<std::uint64_t>((a.end - a.start).ms);
  std::uint64_t total_slab_ms = static_cast<std::uint64_t>(a.total_slabs()) * duration_ms;
  std::uint64_t unserved_slab_ms = 0;
  for (const auto& ev : lease.evictions) {
    Millis rem = std::max<Millis>(0, a.end.ms - ev.at.ms);
    unserved_slab_ms += static_cast<std::uint64_t>(ev.slabs) * rem;
  }
  unserved_slab_ms = std::min(unserved_slab_ms, total_slab_ms);
  std::uint64_t served_slab_ms = total_slab_ms - unserved_slab_ms;

  Bill b;
  b.total = charge_for(unit_price, slab_size, Duration{static_cast<Millis>(total_slab_ms)});
  b.charge = charge_for(unit_price, slab_size, Duration{static_cast<Millis>(served_slab_ms)});
  // derive the unserved value as a difference so conservation is exact
  Money unserved = b.total - b.charge;
  b.rebate = Money{static_cast<MicroCents>(
      std::floor(rebate_rate * static_cast<double>(unserved.micro_cents)))};
  return b;
}

Bill Broker::bill_lease(std::uint64_t lease_id) const {
  auto it = leases_.find(lease_id);
  if (it == leases_.end()) throw std::invalid_argument("unknown lease");
  return bill(it->second, it->second.assignment.unit_price, cfg_.rebate_rate, cfg_.slab_size);
}

AllocateResult Broker::renew(std::uint64_t lease_id, Instant now) {
  auto it = leases_.find(lease_id);
  if (it == leases_.end()) throw std::invalid_argument("unknown lease");
  auto& rec = it->second;
  if (now.ms > rec.assignment.end.ms + cfg_.renew_grace.ms)
    return {AllocateResult::Kind::Rejected, std::nullopt, "expired"};
  for (const auto& p : rec.assignment.parts)
    if (!producers_.count(p.producer_id))
      return {AllocateResult::Kind::Rejected, std::nullopt, "expired"};

  // same slabs, new window, current market price, fresh lease record
  Assignment a = rec.assignment;
  a.lease_id = next_lease_id_++;
  a.start = rec.assignment.end;
  a.end = a.start + rec.requested_duration;
  a.unit_price = current_price_;
  LeaseRecord fresh;
  fresh.assignment = a;
  fresh.requested_duration = rec.requested_duration;
  leases_.emplace(a.lease_id, std::move(fresh));
  for (const auto& p : a.parts) {
    auto& e = producers_.at(p.producer_id);
    e.leased_slab_ms +=
        p.slab_indices.size() * static_cast<std::uint64_t>(rec.requested_duration.ms);
  }
  rec.closed = true;
  return {AllocateResult::Kind::Assigned, a, ""};
}

void Broker::close_lease(std::uint64_t lease_id) {
  auto it = leases_.find(lease_id);
  if (it == leases_.end()) throw std::invalid_argument("unknown lease");
  if (it->second.closed) return;
  it->second.closed = true;
  std::uint32_t evicted = 0;
  for (const auto& ev : it->second.evictions) evicted += ev.slabs;
  for (const auto& p : it->second.assignment.parts) {
    auto pit = producers_.find(p.producer_id);
    if (pit == producers_.end()) continue;
    std::uint32_t held = static_cast<std::uint32_t>(p.slab_indices.size());
    std::uint32_t still_held = evicted >= held ? 0 : held - evicted;
    evicted = evicted >= held ? evicted - held : 0;
    pit->second.leased_slabs =
        pit->second.leased_slabs > still_held ? pit->second.leased_slabs - still_held : 0;
  }
}

const ProducerLedgerEntry* Broker::producer(std::uint64_t id) const {
  auto it = producers_.find(id);
  return it == producers_.end() ? nullptr : &it->second;
}

double Broker::producer_reputation(std::uint64_t id) const {
  auto it = producers_.find(id);
  if (it == producers_.end()) throw std::invalid_argument("unknown producer");
  return it->second.reputation();
}

const LeaseRecord* Broker::lease(std::uint64_t id) const {
  auto it = leases_.find(id);
  return it == leases_.end() ? nullptr : &it->second;
}

std::vector<std::uint64_t> Broker::producer_ids() const {
  std::vector<std::uint64_t> ids;
  for (const auto& [id, e] : producers_) ids.push_back(id);
  return ids;
}

std::string Broker::snapshot() const {
  nlohmann::json j;
  j["version"] = 1;
  j["next_id"] = next_id_;
  j["next_lease_id"] = next_lease_id_;
  j["price_micro_cents"] = current_price_.micro_cents;
  auto& jp = j["producers"] = nlohmann::json::array();
  for (const auto& [id, e] : producers_) {
    jp.push_back({{"id", id},
                  {"endpoint", e.endpoint},
                  {"offered_slabs", e.offered_slabs},
                  {"leased_slabs", e.leased_slabs},
                  {"leased_slab_ms", e.leased_slab_ms},
                  {"unhonored_slab_ms", e.unhonored_slab_ms}});
  }
  auto& jc = j["consumers"] = nlohmann::json::array();
  for (const auto& [id, ep] : consumers_) jc.push_back({{"id", id}, {"endpoint", ep}});
  auto& jl = j["leases"] = nlohmann::json::array();
  for (const auto& [id, rec] : leases_) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : rec.assignment.parts)
      parts.push_back({{"producer_id", p.producer_id}, {"slabs", p.slab_indices.size()}});
    jl.push_back({{"lease_id", id},
                  {"consumer_id", rec.assignment.consumer_id},
                  {"start_ms", rec.assignment.start.ms},
                  {"end_ms", rec.assignment.end.ms},
                  {"unit_price", rec.assignment.unit_price.micro_cents},
                  {"closed", rec.closed},
                  {"parts", parts}});
  }
  j["queue_depth"] = queue_.size();
  return j.dump();
}

void Broker::save_snapshot(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  f << snapshot() << "\n";
}

}  // namespace mm
