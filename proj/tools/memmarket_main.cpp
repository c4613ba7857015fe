// memmarket: market for leased producer memory.
//
// Subcommands: broker serve, producer serve, consumer bench,
//              sim run, sim compare, sim oracle.
// Every subcommand accepts --config FILE (key=value lines) plus flag
// overrides; flags win.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "memmarket/client.hpp"
#include "memmarket/net.hpp"
#include "memmarket/sim.hpp"

namespace {

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

void wait_for_stop() {
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
}

void add_config_flag(CLI::App* cmd) {
  cmd->set_config("--config", "", "key=value config file; flags override");
}

mm::PricingStrategy parse_strategy(const std::string& name) {
  mm::PricingStrategy s;
  if (name == "fixed_fraction")
    s.objective = mm::PricingObjective::FixedFraction;
  else if (name == "max_volume")
    s.objective = mm::PricingObjective::MaxVolume;
  else if (name == "max_revenue")
    s.objective = mm::PricingObjective::MaxRevenue;
  else
    throw CLI::ValidationError("strategy", "unknown strategy: " + name);
  return s;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

int run_broker_serve(std::uint16_t port, const std::string& snapshot) {
  mm::net::BrokerServerConfig cfg;
  cfg.port = port;
  if (!snapshot.empty()) cfg.snapshot_path = snapshot;
  mm::net::BrokerServer server(cfg);
  std::uint16_t bound = server.start();
  if (bound == 0) {
    std::cerr << "failed to bind port " << port << "\n";
    return 1;
  }
  std::cout << "broker listening on 127.0.0.1:" << bound << std::endl;
  wait_for_stop();
  server.stop();
  return 0;
}

int run_producer_serve(const mm::net::ProducerServerConfig& cfg) {
  mm::net::ProducerServer server(cfg);
  if (!server.start()) {
    std::cerr << "failed to start producer (is the broker at " << cfg.broker_host << ":"
              << cfg.broker_port << " up?)\n";
    return 1;
  }
  std::cout << "producer " << server.producer_id() << " listening on 127.0.0.1:"
            << server.kv_port() << std::endl;
  wait_for_stop();
  server.stop();
  return 0;
}

struct BenchOptions {
  std::string broker_host = "127.0.0.1";
  std::uint16_t broker_port = 0;
  std::uint32_t slabs = 2;
  std::int64_t duration_ms = 10 * mm::kMillisPerMinute;
  std::uint64_t ops = 1000;
  std::uint64_t value_bytes = 256;
  std::string mode = "full";
  std::uint64_t seed = 1;
};

int run_consumer_bench(const BenchOptions& opt) {
  mm::SecurityMode mode = opt.mode == "plain"          ? mm::SecurityMode::Plain
                          : opt.mode == "integrity"    ? mm::SecurityMode::IntegrityOnly
                                                       : mm::SecurityMode::Full;
  mm::net::BrokerClient broker;
  if (!broker.connect(opt.broker_host, opt.broker_port)) {
    std::cerr << "cannot reach broker\n";
    return 1;
  }
  auto consumer_id = broker.register_consumer("bench-" + std::to_string(::getpid()));
  if (!consumer_id) {
    std::cerr << "registration failed\n";
    return 1;
  }
  auto grant = broker.request_lease(*consumer_id, opt.slabs, 1, mm::Duration{opt.duration_ms});
  if (!grant) {
    std::cerr << "lease not granted\n";
    return 1;
  }

  mm::SecureKvClient client(mode, mm::crypto::random_key());
  std::size_t stores = 0;
  for (const auto& part : grant->parts) {
    auto [host, port] = mm::net::split_endpoint(part.endpoint);
    std::shared_ptr<mm::net::NetRemoteStore> store;
    // the producer learns of the lease on its next broker report; retry briefly
    for (int attempt = 0; attempt < 50 && !store; ++attempt) {
      store = mm::net::NetRemoteStore::open(host, port, grant->lease_id, mode);
      if (!store) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    if (store) {
      client.add_producer(store);
      ++stores;
    }
  }
  if (stores == 0) {
    std::cerr << "no producer store reachable\n";
    return 1;
  }

  std::mt19937_64 rng(opt.seed);
  std::uint64_t put_ok = 0, get_ok = 0, mismatches = 0, rate_limited = 0;
  std::map<std::string, std::vector<std::uint8_t>> expected;
  for (std::uint64_t i = 0; i < opt.ops; ++i) {
    std::string key = "bench-key-" + std::to_string(i);
    std::vector<std::uint8_t> value(opt.value_bytes);
    for (auto& b : value) b = static_cast<std::uint8_t>(rng());
    std::uint32_t retry = 0;
    auto st = client.put(key, value, &retry);
    if (st == mm::PutStatus::RateLimited) {
      ++rate_limited;
      std::this_thread::sleep_for(std::chrono::milliseconds(retry));
      st = client.put(key, value, &retry);
    }
    if (st != mm::PutStatus::Ok) continue;
    ++put_ok;
    expected[key] = std::move(value);
  }
  for (const auto& [key, value] : expected) {
    auto r = client.get(key);
    if (r.outcome == mm::GetResult::Outcome::Found) {
      if (r.value == value)
        ++get_ok;
      else
        ++mismatches;
    }
  }
  nlohmann::json report = {{"lease_id", grant->lease_id},
                           {"unit_price", grant->unit_price.micro_cents},
                           {"stores", stores},
                           {"ops", opt.ops},
                           {"put_ok", put_ok},
                           {"get_ok", get_ok},
                           {"mismatches", mismatches},
                           {"rate_limited", rate_limited}};
  std::cout << report.dump() << std::endl;
  return mismatches == 0 ? 0 : 1;
}

struct SimOptions {
  std::string trace_path;
  double unit_gb = 0.0;
  std::string out_dir = "runs/latest";
  std::string strategy = "max_revenue";
  std::string demand = "mrc";
  std::uint64_t seed = 1;
  int producers = 20;
  int consumers = 50;
  double hours = 48.0;
  std::int64_t tick_ms = 5 * mm::kMillisPerMinute;
  std::string spot_path;
  std::string mrc_dir;
  bool oracle = false;
};

mm::sim::ClusterTrace sim_trace(const SimOptions& opt) {
  if (!opt.trace_path.empty()) return mm::sim::load_trace(opt.trace_path, opt.unit_gb);
  mm::sim::SynthTraceConfig s;
  s.producers = opt.producers;
  s.consumers = opt.consumers;
  s.duration = mm::Duration{static_cast<mm::Millis>(opt.hours * mm::kMillisPerHour)};
  s.tick = mm::Duration{opt.tick_ms};
  s.seed = opt.seed;
  return mm::sim::make_synthetic_trace(s);
}

mm::sim::SimConfig sim_config(const SimOptions& opt) {
  mm::sim::SimConfig cfg;
  cfg.seed = opt.seed;
  cfg.tick = mm::Duration{opt.tick_ms};
  cfg.strategy = parse_strategy(opt.strategy);
  cfg.demand = opt.demand == "excess" ? mm::sim::DemandSource::Excess
                                      : mm::sim::DemandSource::Mrc;
  cfg.compute_oracle = opt.oracle;
  if (!opt.spot_path.empty()) cfg.spot = mm::load_spot_series(opt.spot_path);
  if (!opt.mrc_dir.empty()) {
    for (const auto& e : std::filesystem::directory_iterator(opt.mrc_dir))
      if (e.path().extension() == ".csv")
        cfg.mrcs.push_back(mm::MissRatioCurve::from_csv(e.path().string()));
  }
  return cfg;
}

int run_sim_run(const SimOptions& opt) {
  auto trace = sim_trace(opt);
  auto cfg = sim_config(opt);
  auto result = mm::sim::run(trace, cfg);
  std::filesystem::create_directories(opt.out_dir);
  write_file(std::filesystem::path(opt.out_dir) / "metrics.csv", result.metrics_csv());
  write_file(std::filesystem::path(opt.out_dir) / "manifest.json",
             mm::sim::run_manifest_json(
                 cfg, opt.trace_path.empty() ? "synthetic" : opt.trace_path));
  nlohmann::json summary = {
      {"ticks", result.ticks.size()},
      {"total_revenue_micro_cents", result.total_revenue.micro_cents},
      {"mean_volume_gb", result.mean_volume_gb},
      {"mean_utilization", result.mean_utilization},
      {"mean_baseline_utilization", result.mean_baseline_utilization},
      {"satisfied_request_fraction", result.satisfied_request_fraction},
      {"revoked_slab_fraction", result.revoked_slab_fraction},
      {"mean_price_deviation", result.mean_price_deviation}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_sim_compare(const SimOptions& opt) {
  auto trace = sim_trace(opt);
  auto cfg = sim_config(opt);
  std::vector<mm::PricingStrategy> strategies = {
      parse_strategy("fixed_fraction"), parse_strategy("max_revenue"),
      parse_strategy("max_volume")};
  auto rows = mm::sim::compare_strategies(trace, cfg, strategies);
  std::filesystem::create_directories(opt.out_dir);
  write_file(std::filesystem::path(opt.out_dir) / "compare.csv", mm::sim::compare_csv(rows));
  std::cout << mm::sim::compare_csv(rows);
  return 0;
}

int run_sim_oracle(const SimOptions& opt) {
  auto trace = sim_trace(opt);
  auto cfg = sim_config(opt);
  cfg.compute_oracle = true;
  auto result = mm::sim::run(trace, cfg);
  std::filesystem::create_directories(opt.out_dir);
  std::string csv = "at_ms,price_micro_cents,oracle_price_micro_cents\n";
  for (const auto& m : result.ticks)
    csv += std::to_string(m.at.ms) + "," + std::to_string(m.price.micro_cents) + "," +
           std::to_string(m.oracle_price.micro_cents) + "\n";
  write_file(std::filesystem::path(opt.out_dir) / "oracle.csv", csv);
  nlohmann::json summary = {{"mean_price_deviation", result.mean_price_deviation}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();
  CLI::App app{"memory market toolkit"};
  app.require_subcommand(1);

  // broker serve
  auto* broker_cmd = app.add_subcommand("broker", "broker commands")->require_subcommand(1);
  auto* broker_serve = broker_cmd->add_subcommand("serve", "run the broker");
  std::uint16_t broker_port = 7000;
  std::string snapshot;
  broker_serve->add_option("--port", broker_port, "listen port (0 = ephemeral)");
  broker_serve->add_option("--snapshot", snapshot, "periodic state snapshot path");
  add_config_flag(broker_serve);

  // producer serve
  auto* producer_cmd = app.add_subcommand("producer", "producer commands")->require_subcommand(1);
  auto* producer_serve = producer_cmd->add_subcommand("serve", "serve harvested slabs");
  mm::net::ProducerServerConfig pcfg;
  std::string producer_broker = "127.0.0.1:7000";
  producer_serve->add_option("--broker", producer_broker, "broker host:port");
  producer_serve->add_option("--port", pcfg.kv_port, "KV listen port (0 = ephemeral)");
  producer_serve->add_option("--slabs", pcfg.total_slabs, "slabs offered");
  producer_serve->add_option("--seed", pcfg.seed, "store sampling seed");
  producer_serve->add_option("--report-interval-ms", pcfg.report_interval.ms,
                             "usage report cadence");
  producer_serve->add_option("--reclaim-after-ms", pcfg.reclaim_after.ms,
                             "test hook: reclaim memory this long after start");
  producer_serve->add_option("--reclaim-bytes", pcfg.reclaim_bytes,
                             "test hook: bytes to reclaim");
  add_config_flag(producer_serve);

  // consumer bench
  auto* consumer_cmd = app.add_subcommand("consumer", "consumer commands")->require_subcommand(1);
  auto* consumer_bench = consumer_cmd->add_subcommand("bench", "lease memory and bench KV ops");
  BenchOptions bench;
  std::string bench_broker = "127.0.0.1:7000";
  consumer_bench->add_option("--broker", bench_broker, "broker host:port");
  consumer_bench->add_option("--slabs", bench.slabs, "slabs to lease");
  consumer_bench->add_option("--duration-ms", bench.duration_ms, "lease duration");
  consumer_bench->add_option("--ops", bench.ops, "put/get round trips");
  consumer_bench->add_option("--value-bytes", bench.value_bytes, "value size");
  consumer_bench->add_option("--mode", bench.mode, "full|integrity|plain");
  consumer_bench->add_option("--seed", bench.seed, "workload seed");
  add_config_flag(consumer_bench);

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "simulator commands")->require_subcommand(1);
  SimOptions sopt;
  auto add_sim_options = [&](CLI::App* c) {
    c->add_option("--trace", sopt.trace_path, "trace CSV (omit for synthetic)");
    c->add_option("--unit-gb", sopt.unit_gb, "GB per trace memory unit (0 = already GB)");
    c->add_option("--out", sopt.out_dir, "run output directory");
    c->add_option("--strategy", sopt.strategy, "fixed_fraction|max_revenue|max_volume");
    c->add_option("--demand", sopt.demand, "mrc|excess");
    c->add_option("--seed", sopt.seed, "simulation seed");
    c->add_option("--producers", sopt.producers, "synthetic trace producers");
    c->add_option("--consumers", sopt.consumers, "synthetic trace consumers");
    c->add_option("--hours", sopt.hours, "synthetic trace length");
    c->add_option("--tick-ms", sopt.tick_ms, "tick length");
    c->add_option("--spot", sopt.spot_path, "spot price CSV");
    c->add_option("--mrc-dir", sopt.mrc_dir, "directory of MRC CSVs");
    c->add_flag("--oracle", sopt.oracle, "also compute the per-tick oracle price");
    add_config_flag(c);
  };
  auto* sim_run = sim_cmd->add_subcommand("run", "run one simulation");
  add_sim_options(sim_run);
  auto* sim_compare = sim_cmd->add_subcommand("compare", "compare pricing strategies");
  add_sim_options(sim_compare);
  auto* sim_oracle = sim_cmd->add_subcommand("oracle", "score prices against the grid oracle");
  add_sim_options(sim_oracle);

  CLI11_PARSE(app, argc, argv);

  try {
    if (broker_serve->parsed()) return run_broker_serve(broker_port, snapshot);
    if (producer_serve->parsed()) {
      auto [host, port] = mm::net::split_endpoint(producer_broker);
      pcfg.broker_host = host;
      pcfg.broker_port = port;
      return run_producer_serve(pcfg);
    }
    if (consumer_bench->parsed()) {
      auto [host, port] = mm::net::split_endpoint(bench_broker);
      bench.broker_host = host;
      bench.broker_port = port;
      return run_consumer_bench(bench);
    }
    if (sim_run->parsed()) return run_sim_run(sopt);
    if (sim_compare->parsed()) return run_sim_compare(sopt);
    if (sim_oracle->parsed()) return run_sim_oracle(sopt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
