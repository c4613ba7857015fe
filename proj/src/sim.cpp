#include "memmarket/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "memmarket/client.hpp"
#include "memmarket/harvester.hpp"
#include "memmarket/silo.hpp"

namespace mm::sim {

using nlohmann::json;

// --- traces ---

std::vector<std::uint64_t> ClusterTrace::machine_ids() const {
  std::set<std::uint64_t> ids;
  for (const auto& r : rows) ids.insert(r.machine_id);
  return {ids.begin(), ids.end()};
}

std::vector<Instant> ClusterTrace::tick_times() const {
  std::set<Millis> at;
  for (const auto& r : rows) at.insert(r.at.ms);
  std::vector<Instant> out;
  out.reserve(at.size());
  for (auto ms : at) out.push_back(Instant{ms});
  return out;
}

ClusterTrace parse_trace(const std::string& text, double unit_gb) {
  ClusterTrace t;
  std::istringstream in(text);
  std::string line;
  double scale = unit_gb > 0.0 ? unit_gb : 1.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("timestamp", 0) == 0) continue;  // header
    TraceRow r;
    char comma;
    std::istringstream ls(line);
    if (!(ls >> r.at.ms >> comma >> r.machine_id >> comma >> r.mem_capacity_gb >> comma >>
          r.mem_used_gb >> comma >> r.cpu_used_frac >> comma >> r.bw_used_frac))
      throw std::invalid_argument("bad trace row: " + line);
    r.mem_capacity_gb *= scale;
    r.mem_used_gb *= scale;
    if (r.mem_capacity_gb <= 0.0 || r.mem_used_gb < 0.0)
      throw std::invalid_argument("bad trace row: " + line);
    t.rows.push_back(r);
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const TraceRow& a, const TraceRow& b) {
    if (a.at.ms != b.at.ms) return a.at.ms < b.at.ms;
    return a.machine_id < b.machine_id;
  });
  // per-machine timestamps must be monotone (now guaranteed by the sort), but
  // duplicates are a data error
  std::map<std::uint64_t, Millis> last;
  for (const auto& r : t.rows) {
    auto it = last.find(r.machine_id);
    if (it != last.end() && r.at.ms <= it->second)
      throw std::invalid_argument("duplicate trace timestamp for machine " +
                                  std::to_string(r.machine_id));
    last[r.machine_id] = r.at.ms;
  }
  return t;
}

ClusterTrace load_trace(const std::string& path, double unit_gb) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open trace: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str(), unit_gb);
}

std::string trace_csv(const ClusterTrace& trace) {
  std::string out = "timestamp_ms,machine_id,mem_capacity_gb,mem_used_gb,cpu_used_frac,bw_used_frac\n";
  char buf[256];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%llu,%.6f,%.6f,%.6f,%.6f\n",
                  static_cast<long long>(r.at.ms),
                  static_cast<unsigned long long>(r.machine_id), r.mem_capacity_gb,
                  r.mem_used_gb, r.cpu_used_frac, r.bw_used_frac);
    out += buf;
  }
  return out;
}

ClusterTrace make_synthetic_trace(const SynthTraceConfig& cfg) {
  if (cfg.tick.ms <= 0) throw std::invalid_argument("non-positive tick");
  ClusterTrace t;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Machine {
    std::uint64_t id;
    bool producer;
    double cap;
    double phase;
  };
  std::vector<Machine> machines;
  for (int i = 0; i < cfg.producers; ++i)
    machines.push_back({static_cast<std::uint64_t>(1 + i), true, cfg.producer_capacity_gb,
                        unit(rng) * 2.0 * M_PI});
  for (int i = 0; i < cfg.consumers; ++i)
    machines.push_back({static_cast<std::uint64_t>(1001 + i), false, cfg.consumer_capacity_gb,
                        unit(rng) * 2.0 * M_PI});

  for (Millis ms = 0; ms < cfg.duration.ms; ms += cfg.tick.ms) {
    double day_frac = static_cast<double>(ms) / static_cast<double>(kMillisPerDay);
    for (const auto& m : machines) {
      double wave = std::sin(2.0 * M_PI * day_frac + m.phase);
      double frac;
      if (m.producer) {
        frac = 0.55 + 0.10 * wave + 0.02 * noise(rng);
        frac = std::clamp(frac, 0.41, 0.95);
      } else {
        frac = 0.85 + 0.25 * wave + 0.05 * noise(rng);
        if (unit(rng) < 0.01) frac += 0.4;  // burst
        frac = std::clamp(frac, 0.10, 1.50);
      }
      TraceRow r;
      r.at = Instant{ms};
      r.machine_id = m.id;
      r.mem_capacity_gb = m.cap;
      r.mem_used_gb = m.cap * frac;
      r.cpu_used_frac = std::clamp(0.3 + 0.2 * wave + 0.05 * noise(rng), 0.0, 1.0);
      r.bw_used_frac = std::clamp(0.2 + 0.1 * wave + 0.05 * noise(rng), 0.0, 1.0);
      t.rows.push_back(r);
    }
  }
  return t;
}

Classification classify_machines(const ClusterTrace& trace, double producer_min_frac) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  struct Agg {
    double min_frac = 1e30;
    bool overflow = false;
  };
  std::map<std::uint64_t, Agg> agg;
  for (const auto& r : trace.rows) {
    auto& a = agg[r.machine_id];
    a.min_frac = std::min(a.min_frac, r.mem_used_gb / r.mem_capacity_gb);
    if (r.mem_used_gb > r.mem_capacity_gb * (1.0 + 1e-12)) a.overflow = true;
  }
  Classification c;
  for (const auto& [id, a] : agg) {
    if (a.overflow)
      c.consumers.push_back(id);
    else if (a.min_frac >= producer_min_frac)
      c.producers.push_back(id);
    else
      c.idle.push_back(id);
  }
  return c;
}

// --- simulation ---

namespace {

constexpr double kSlabGb = static_cast<double>(kSlabSize) / static_cast<double>(kPricingGB);

SpotPricePoint spot_at(const std::vector<SpotPricePoint>& series, Instant now) {
  SpotPricePoint best = series.front();
  for (const auto& p : series) {
    if (p.at > now) break;
    best = p;
  }
  return best;
}

std::vector<SpotPricePoint> default_spot() {
  // one 8 GB instance at 1.6 cents/hour -> 0.2 cent/GB*hour ceiling
  return {SpotPricePoint{Instant{0}, Money{1'600'000}, 8.0}};
}

struct ConsumerState {
  std::uint64_t machine_id = 0;
  std::uint64_t broker_id = 0;
  MissRatioCurve mrc;
  double local_gb = 0.0;  // local cache already owned
  double leased_gb = 0.0;
  std::uint32_t queued = 0;  // outstanding queued requests
};

struct ActiveLease {
  std::uint64_t lease_id = 0;
  std::uint64_t consumer_broker_id = 0;
  std::map<std::uint64_t, std::uint32_t> producer_slabs;  // broker producer id -> slabs
  std::uint32_t slabs = 0;
  Instant end{};
  Money unit_price{0};
};

struct ProducerSim {
  std::uint64_t machine_id = 0;
  std::uint64_t broker_id = 0;
  double cap = 0.0;
  Harvester harvester;
  Silo silo;
  std::mt19937_64 rng;
  std::uint64_t next_page = 1;
  ByteSize prev_silo_occupancy = 0;
  double prev_used = 0.0;
};

}  // namespace

SimResult run(const ClusterTrace& trace, const SimConfig& cfg) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  if (cfg.tick.ms <= 0) throw std::invalid_argument("non-positive tick");

  auto ticks = trace.tick_times();
  auto cls = classify_machines(trace, cfg.producer_min_frac);

  // machine -> time -> row, with last-known fill at lookup
  std::map<std::uint64_t, std::map<Millis, TraceRow>> rows;
  for (const auto& r : trace.rows) rows[r.machine_id][r.at.ms] = r;
  auto row_at = [&](std::uint64_t machine, Instant at) -> const TraceRow* {
    auto mit = rows.find(machine);
    if (mit == rows.end()) return nullptr;
    auto it = mit->second.upper_bound(at.ms);
    if (it == mit->second.begin()) return nullptr;
    return &std::prev(it)->second;
  };

  std::mt19937_64 rng(cfg.seed);

  Broker broker;
  std::vector<ProducerSim> producers;
  std::map<std::uint64_t, std::size_t> producer_by_broker_id;
  for (auto m : cls.producers) {
    double cap = rows[m].begin()->second.mem_capacity_gb;
    double min_used = 1e30;
    for (const auto& [ms, r] : rows[m]) min_used = std::min(min_used, r.mem_used_gb);
    auto offered = static_cast<std::uint32_t>(
        std::max(0.0, (cap - min_used) * static_cast<double>(kPricingGB)) / kSlabSize);
    if (offered == 0) continue;
    auto id = broker.register_producer("sim-producer-" + std::to_string(m), offered);
    HarvesterConfig hcfg;
    hcfg.chunk_size = 4 * kMiB;
    hcfg.epoch = cfg.tick;
    ProducerSim p{m,
                  id,
                  cap,
                  Harvester(hcfg, static_cast<ByteSize>(cap * 1e9),
                            static_cast<ByteSize>((cap - min_used) * 1e9)),
                  Silo(SiloConfig{}),
                  std::mt19937_64(cfg.seed ^ (m * 0x9e3779b97f4a7c15ull)),
                  1,
                  0,
                  0.0};
    producer_by_broker_id[id] = producers.size();
    producers.push_back(std::move(p));
  }

  std::vector<ConsumerState> consumers;
  std::map<std::uint64_t, std::size_t> consumer_by_broker_id;
  {
    auto curves = cfg.mrcs.empty() ? synthetic_mrcs(cls.consumers.size(), cfg.seed)
                                   : cfg.mrcs;
    std::vector<std::size_t> pick(cls.consumers.size());
    std::uniform_int_distribution<std::size_t> dist(0, curves.empty() ? 0 : curves.size() - 1);
    for (auto& i : pick) i = curves.empty() ? 0 : dist(rng);
    std::size_t k = 0;
    for (auto m : cls.consumers) {
      ConsumerState c;
      c.machine_id = m;
      c.broker_id = broker.register_consumer("sim-consumer-" + std::to_string(m));
      if (!curves.empty()) c.mrc = curves[pick[k]];
      c.local_gb = 0.25 * c.mrc.max_gb();
      consumer_by_broker_id[c.broker_id] = consumers.size();
      consumers.push_back(std::move(c));
      ++k;
    }
  }

  auto spot_series = cfg.spot.empty() ? default_spot() : cfg.spot;
  Money price = cfg.initial_price.micro_cents > 0 ? cfg.initial_price
                                                  : initial_price(spot_series.front());
  broker.set_current_price(price);

  const Duration lease_len{std::max(cfg.min_lease.ms, cfg.lease_duration.ms)};
  const double tick_hours =
      static_cast<double>(cfg.tick.ms) / static_cast<double>(kMillisPerHour);

  // demand rate per consumer scales with its memory pressure at the tick
  auto consumer_rate = [&](const ConsumerState& c, Instant at) {
    const auto* r = row_at(c.machine_id, at);
    if (!r) return 0.0;
    double pressure = std::clamp(r->mem_used_gb / r->mem_capacity_gb, 0.0, 1.5);
    return cfg.base_request_rate * pressure;
  };
  auto consumer_want_gb = [&](const ConsumerState& c, Money at_price, Instant at) {
    if (cfg.demand == DemandSource::Excess) {
      const auto* r = row_at(c.machine_id, at);
      return r ? std::max(0.0, r->mem_used_gb - r->mem_capacity_gb) : 0.0;
    }
    return purchase_decision(c.mrc, at_price, c.local_gb, cfg.vm_cost_per_hour,
                             consumer_rate(c, at), cfg.remote_hit_discount);
  };
  auto demand_gb = [&](Money at_price, Instant at) {
    double total = 0.0;
    for (const auto& c : consumers) total += consumer_want_gb(c, at_price, at);
    return total;
  };
  auto supply_gb = [&] {
    double total = 0.0;
    for (const auto& p : producers) total += broker.free_slabs(p.broker_id) * kSlabGb;
    return total;
  };

  std::map<std::uint64_t, ActiveLease> active;
  std::uint64_t requests_total = 0, requests_satisfied = 0;
  std::uint64_t slabs_allocated = 0, slabs_revoked = 0;

  auto record_grant = [&](const Assignment& a) {
    ActiveLease l;
    l.lease_id = a.lease_id;
    l.consumer_broker_id = a.consumer_id;
    for (const auto& part : a.parts)
      l.producer_slabs[part.producer_id] +=
          static_cast<std::uint32_t>(part.slab_indices.size());
    l.slabs = a.total_slabs();
    l.end = a.end;
    l.unit_price = a.unit_price;
    slabs_allocated += l.slabs;
    auto cit = consumer_by_broker_id.find(a.consumer_id);
    if (cit != consumer_by_broker_id.end())
      consumers[cit->second].leased_gb += l.slabs * kSlabGb;
    active.emplace(l.lease_id, std::move(l));
  };

  SimResult result;
  double deviation_sum = 0.0;
  std::size_t deviation_n = 0;

  for (Instant at : ticks) {
    // 1. producers report usage (history step may be coarser than the tick)
    for (auto& p : producers) {
      const auto* r = row_at(p.machine_id, at);
      if (!r) continue;
      double free_gb = std::max(0.0, r->mem_capacity_gb - r->mem_used_gb);
      try {
        broker.report_usage(p.broker_id, free_gb, 1.0 - r->bw_used_frac,
                            1.0 - r->cpu_used_frac, at);
      } catch (const std::invalid_argument&) {
      }
    }

    // 2. expire leases that ran out
    for (auto it = active.begin(); it != active.end();) {
      if (it->second.end <= at) {
        broker.close_lease(it->first);
        auto cit = consumer_by_broker_id.find(it->second.consumer_broker_id);
        if (cit != consumer_by_broker_id.end())
          consumers[cit->second].leased_gb =
              std::max(0.0, consumers[cit->second].leased_gb - it->second.slabs * kSlabGb);
        it = active.erase(it);
      } else {
        ++it;
      }
    }

    // 3. revoke slabs where actual free memory fell below what is leased,
    //    newest leases first
    for (auto& p : producers) {
      const auto* r = row_at(p.machine_id, at);
      if (!r) continue;
      double avail_gb = std::max(0.0, r->mem_capacity_gb - r->mem_used_gb);
      double leased_gb = 0.0;
      for (const auto& [lid, l] : active) {
        auto pit = l.producer_slabs.find(p.broker_id);
        if (pit != l.producer_slabs.end()) leased_gb += pit->second * kSlabGb;
      }
      if (leased_gb <= avail_gb + 1e-9) continue;
      auto shortfall = static_cast<std::uint32_t>(std::ceil((leased_gb - avail_gb) / kSlabGb));
      for (auto it = active.rbegin(); it != active.rend() && shortfall > 0; ++it) {
        auto& l = it->second;
        auto pit = l.producer_slabs.find(p.broker_id);
        if (pit == l.producer_slabs.end() || pit->second == 0) continue;
        std::uint32_t take = std::min(shortfall, pit->second);
        broker.record_eviction(l.lease_id, p.broker_id, take, at);
        pit->second -= take;
        l.slabs -= take;
        shortfall -= take;
        slabs_revoked += take;
        auto cit = consumer_by_broker_id.find(l.consumer_broker_id);
        if (cit != consumer_by_broker_id.end())
          consumers[cit->second].leased_gb =
              std::max(0.0, consumers[cit->second].leased_gb - take * kSlabGb);
      }
    }

    // 4. consumer requests at the current price
    if (cfg.market_enabled) {
      for (auto& c : consumers) {
        if (c.queued > 0) continue;  // one outstanding request per consumer
        double want = consumer_want_gb(c, price, at);
        double delta = want - c.leased_gb;
        if (delta < kSlabGb) continue;
        AllocationRequest req;
        req.consumer_id = c.broker_id;
        req.terms.slabs = static_cast<std::uint32_t>(std::ceil(delta / kSlabGb));
        req.terms.min_slabs = 1;
        req.terms.duration = lease_len;
        ++requests_total;
        auto res = broker.allocate(req, at);
        if (res.kind == AllocateResult::Kind::Assigned) {
          ++requests_satisfied;
          record_grant(*res.assignment);
        } else if (res.kind == AllocateResult::Kind::Queued) {
          ++c.queued;
        }
      }
      for (const auto& a : broker.tick_queue(at)) {
        auto cit = consumer_by_broker_id.find(a.consumer_id);
        if (cit != consumer_by_broker_id.end() && consumers[cit->second].queued > 0) {
          --consumers[cit->second].queued;
          ++requests_satisfied;
        }
        record_grant(a);
      }
    }

    // 5. pricing step (and, when asked, the brute-force oracle)
    auto spot = spot_at(spot_series, at);
    Money oracle{0};
    if (cfg.market_enabled) {
      auto evaluate = [&](Money p) {
        return CandidateOutcome{std::min(supply_gb(), demand_gb(p, at)) * tick_hours};
      };
      price = step_price(price, evaluate, cfg.strategy, spot);
      broker.set_current_price(price);
      if (cfg.compute_oracle) {
        Money ceiling = price_ceiling(spot);
        double sup = supply_gb();
        double best_rev = -1.0;
        for (MicroCents p = 0; p <= ceiling.micro_cents; p += cfg.strategy.step.micro_cents) {
          double rev = static_cast<double>(p) * std::min(sup, demand_gb(Money{p}, at));
          if (rev > best_rev + 1e-9) {
            best_rev = rev;
            oracle = Money{p};
          }
        }
        if (oracle.micro_cents > 0) {
          deviation_sum += std::abs(static_cast<double>(price.micro_cents - oracle.micro_cents)) /
                           static_cast<double>(oracle.micro_cents);
          ++deviation_n;
        }
      }
    }

    // 6. accrue revenue for the slab*time served this tick
    Money tick_revenue{0};
    for (const auto& [lid, l] : active)
      tick_revenue =
          tick_revenue + charge_for(l.unit_price, static_cast<ByteSize>(l.slabs) * kSlabSize,
                                    cfg.tick);

    // 7. synthetic harvester/silo workload per producer
    for (auto& p : producers) {
      const auto* r = row_at(p.machine_id, at);
      if (!r) continue;
      double pressure = r->mem_used_gb / r->mem_capacity_gb;
      std::uniform_real_distribution<double> jitter(0.0, 5.0);
      PerfSample s;
      s.at = at;
      s.metric = 100.0 * (1.0 + std::max(0.0, pressure - 0.8) * 10.0) + jitter(p.rng);
      s.had_page_in = r->mem_used_gb > p.prev_used + 1e-9;
      p.prev_used = r->mem_used_gb;
      p.harvester.record_sample(s);
      bool silo_grew = p.silo.occupancy() > p.prev_silo_occupancy;
      p.prev_silo_occupancy = p.silo.occupancy();
      Action a = p.harvester.step(at, silo_grew);
      if (a.kind == ActionKind::Harvest) {
        for (int i = 0; i < 16; ++i) p.silo.swap_out(p.next_page++, at);
      }
      if (a.prefetch_bytes > 0) p.silo.prefetch(a.prefetch_bytes);
      if (p.next_page > 1) {
        std::uniform_int_distribution<std::uint64_t> pick(1, p.next_page - 1);
        p.silo.access(pick(p.rng), at);
      }
      p.silo.tick(at);
    }

    // 8. metrics
    TickMetrics m;
    m.at = at;
    m.price = price;
    for (const auto& [lid, l] : active) m.trading_volume_gb += l.slabs * kSlabGb;
    m.producer_revenue = tick_revenue;
    result.total_revenue = result.total_revenue + tick_revenue;
    double used_sum = 0.0, cap_sum = 0.0;
    for (const auto& [machine, series] : rows) {
      const auto* r = row_at(machine, at);
      if (!r) continue;
      used_sum += std::min(r->mem_used_gb, r->mem_capacity_gb);
      cap_sum += r->mem_capacity_gb;
    }
    m.baseline_utilization = cap_sum > 0.0 ? used_sum / cap_sum : 0.0;
    m.cluster_utilization =
        cap_sum > 0.0 ? std::min(1.0, (used_sum + m.trading_volume_gb) / cap_sum) : 0.0;
    if (!consumers.empty() && cfg.demand == DemandSource::Mrc) {
      double hit = 0.0;
      for (const auto& c : consumers) hit += 1.0 - c.mrc.miss_at(c.local_gb + c.leased_gb);
      m.mean_consumer_hit_ratio = hit / static_cast<double>(consumers.size());
    }
    m.satisfied_request_fraction =
        requests_total == 0 ? 1.0
                            : static_cast<double>(requests_satisfied) /
                                  static_cast<double>(requests_total);
    m.revoked_slab_fraction =
        slabs_allocated == 0 ? 0.0
                             : static_cast<double>(slabs_revoked) /
                                   static_cast<double>(slabs_allocated);
    m.oracle_price = oracle;
    result.ticks.push_back(m);
  }

  double vol = 0.0, util = 0.0, base = 0.0;
  for (const auto& m : result.ticks) {
    vol += m.trading_volume_gb;
    util += m.cluster_utilization;
    base += m.baseline_utilization;
  }
  auto n = static_cast<double>(result.ticks.size());
  result.mean_volume_gb = vol / n;
  result.mean_utilization = util / n;
  result.mean_baseline_utilization = base / n;
  result.satisfied_request_fraction =
      result.ticks.empty() ? 1.0 : result.ticks.back().satisfied_request_fraction;
  result.revoked_slab_fraction =
      result.ticks.empty() ? 0.0 : result.ticks.back().revoked_slab_fraction;
  result.mean_price_deviation = deviation_n == 0 ? 0.0 : deviation_sum / deviation_n;
  return result;
}

std::vector<Money> price_oracle(const ClusterTrace& trace, const SimConfig& cfg) {
  SimConfig c = cfg;
  c.compute_oracle = true;
  auto res = run(trace, c);
  std::vector<Money> out;
  out.reserve(res.ticks.size());
  for (const auto& m : res.ticks) out.push_back(m.oracle_price);
  return out;
}

std::string SimResult::metrics_csv() const {
  std::string out =
      "at_ms,price_micro_cents,volume_gb,revenue_micro_cents,utilization,"
      "baseline_utilization,hit_ratio,satisfied_fraction,revoked_fraction,oracle_price\n";
  char buf[320];
  for (const auto& m : ticks) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%lld,%.6f,%.6f,%.6f,%.6f,%.6f,%lld\n",
                  static_cast<long long>(m.at.ms),
                  static_cast<long long>(m.price.micro_cents), m.trading_volume_gb,
                  static_cast<long long>(m.producer_revenue.micro_cents),
                  m.cluster_utilization, m.baseline_utilization, m.mean_consumer_hit_ratio,
                  m.satisfied_request_fraction, m.revoked_slab_fraction,
                  static_cast<long long>(m.oracle_price.micro_cents));
    out += buf;
  }
  return out;
}

std::string strategy_name(const PricingStrategy& s) {
  switch (s.objective) {
    case PricingObjective::FixedFraction: return "fixed_fraction";
    case PricingObjective::MaxRevenue: return "max_revenue";
    case PricingObjective::MaxVolume: return "max_volume";
  }
  return "unknown";
}

std::vector<StrategyRow> compare_strategies(const ClusterTrace& trace, const SimConfig& cfg,
                                            const std::vector<PricingStrategy>& strategies) {
  std::vector<StrategyRow> rows;
  for (const auto& s : strategies) {
    SimConfig c = cfg;  // identical seed and trace across strategies
    c.strategy = s;
    rows.push_back({strategy_name(s), run(trace, c)});
  }
  return rows;
}

std::string compare_csv(const std::vector<StrategyRow>& rows) {
  std::string out =
      "strategy,total_revenue_micro_cents,mean_volume_gb,mean_utilization,"
      "satisfied_fraction,revoked_fraction\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%.6f,%.6f,%.6f,%.6f\n", r.name.c_str(),
                  static_cast<long long>(r.result.total_revenue.micro_cents),
                  r.result.mean_volume_gb, r.result.mean_utilization,
                  r.result.satisfied_request_fraction, r.result.revoked_slab_fraction);
    out += buf;
  }
  return out;
}

std::vector<MissRatioCurve> synthetic_mrcs(std::size_t n, std::uint64_t seed) {
  std::vector<MissRatioCurve> out;
  std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4full);
  std::uniform_real_distribution<double> tau_dist(1.0, 4.0);
  for (std::size_t i = 0; i < n; ++i) {
    double tau = tau_dist(rng);
    std::vector<std::pair<double, double>> knots;
    for (double gb = 0.0; gb <= 8.0 + 1e-9; gb += 0.5)
      knots.emplace_back(gb, 0.05 + 0.90 * std::exp(-gb / tau));
    out.emplace_back(std::move(knots));
  }
  return out;
}

std::string run_manifest_json(const SimConfig& cfg, const std::string& trace_desc) {
  std::string revision = "unknown";
  if (FILE* p = ::popen("git rev-parse HEAD 2>/dev/null", "r")) {
    char buf[128] = {0};
    if (fgets(buf, sizeof(buf), p)) {
      revision = buf;
      while (!revision.empty() && (revision.back() == '\n' || revision.back() == '\r'))
        revision.pop_back();
    }
    ::pclose(p);
  }
  json j = {{"trace", trace_desc},
            {"seed", cfg.seed},
            {"tick_ms", cfg.tick.ms},
            {"consumer_capacity_gb", cfg.consumer_capacity_gb},
            {"min_lease_ms", cfg.min_lease.ms},
            {"lease_duration_ms", cfg.lease_duration.ms},
            {"producer_min_frac", cfg.producer_min_frac},
            {"strategy", strategy_name(cfg.strategy)},
            {"strategy_fraction", cfg.strategy.fraction},
            {"price_step", cfg.strategy.step.micro_cents},
            {"demand", cfg.demand == DemandSource::Mrc ? "mrc" : "excess"},
            {"vm_cost_per_hour", cfg.vm_cost_per_hour.micro_cents},
            {"base_request_rate", cfg.base_request_rate},
            {"remote_hit_discount", cfg.remote_hit_discount},
            {"git_revision", revision}};
  return j.dump(2);
}

}  // namespace mm::sim
