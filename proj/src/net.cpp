#include "memmarket/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include "nlohmann/json.hpp"

namespace mm::net {

using nlohmann::json;

Instant wall_clock_now() {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
  return Instant{ms};
}

// --- TcpConn ---

TcpConn::~TcpConn() { close(); }

void TcpConn::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<TcpConn> TcpConn::connect_to(const std::string& host, std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return std::nullopt;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return std::nullopt;
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return std::nullopt;
  }
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpConn(fd);
}

bool TcpConn::send_frame(const wire::Frame& f) {
  if (fd_ < 0) return false;
  auto bytes = wire::encode(f);
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<wire::Frame> TcpConn::read_frame() {
  while (fd_ >= 0) {
    if (auto f = decoder_.next()) return f;
    if (decoder_.failed()) return std::nullopt;
    std::uint8_t buf[4096];
    ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n <= 0) return std::nullopt;
    decoder_.feed({buf, static_cast<std::size_t>(n)});
  }
  return std::nullopt;
}

// --- FrameServer ---

std::uint16_t FrameServer::start(std::uint16_t port, Handler handler) {
  handler_ = std::move(handler);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) return 0;
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    return 0;
  }
  socklen_t len = sizeof(addr);
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  accept_thread_ = std::thread([this] { accept_loop(); });
  return ntohs(addr.sin_port);
}

void FrameServer::accept_loop() {
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) break;
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mu_);
    conn_threads_.emplace_back([this, fd] {
      TcpConn conn(fd);
      handler_(conn);
    });
  }
}

void FrameServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    threads.swap(conn_threads_);
  }
  for (auto& t : threads)
    if (t.joinable()) t.join();
}

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& endpoint) {
  auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) return {endpoint, 0};
  return {endpoint.substr(0, colon),
          static_cast<std::uint16_t>(std::stoul(endpoint.substr(colon + 1)))};
}

// --- BrokerServer ---

namespace {

json assignment_json(const Assignment& a, const Broker& broker) {
  json parts = json::array();
  for (const auto& p : a.parts) {
    const auto* entry = broker.producer(p.producer_id);
    parts.push_back({{"producer_id", p.producer_id},
                     {"endpoint", entry ? entry->endpoint : ""},
                     {"slabs", p.slab_indices.size()}});
  }
  return {{"lease_id", a.lease_id},
          {"consumer_id", a.consumer_id},
          {"unit_price", a.unit_price.micro_cents},
          {"start_ms", a.start.ms},
          {"end_ms", a.end.ms},
          {"parts", parts}};
}

wire::Frame err_json(const std::string& why) {
  return wire::make_json(wire::Opcode::Err, json{{"error", why}}.dump());
}

}  // namespace

BrokerServer::BrokerServer(BrokerServerConfig cfg) : cfg_(cfg), broker_(cfg.broker) {
  broker_.set_current_price(cfg_.initial_unit_price);
}

std::uint16_t BrokerServer::start() {
  port_ = server_.start(cfg_.port, [this](TcpConn& c) { handle(c); });
  if (port_ == 0) return 0;
  tick_thread_ = std::thread([this] {
    while (!stopping_) {
      {
        std::lock_guard lock(mu_);
        auto granted = broker_.tick_queue(wall_clock_now());
        for (const auto& a : granted)
          for (const auto& p : a.parts) undelivered_[p.producer_id].push_back(a.lease_id);
        if (cfg_.snapshot_path) broker_.save_snapshot(*cfg_.snapshot_path);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.tick_interval.ms));
    }
  });
  return port_;
}

void BrokerServer::stop() {
  if (stopping_.exchange(true)) return;
  server_.stop();
  if (tick_thread_.joinable()) tick_thread_.join();
}

void BrokerServer::handle(TcpConn& conn) {
  while (auto f = conn.read_frame()) {
    wire::Frame reply;
    try {
      reply = dispatch(*f);
    } catch (const std::exception& e) {
      reply = err_json(e.what());
    }
    if (!conn.send_frame(reply)) break;
  }
}

wire::Frame BrokerServer::dispatch(const wire::Frame& f) {
  std::lock_guard lock(mu_);
  Instant now = wall_clock_now();
  json body = json::parse(wire::json_payload(f), nullptr, false);
  if (body.is_discarded()) return err_json("bad json");

  switch (f.opcode) {
    case wire::Opcode::Register: {
      std::string role = body.value("role", "");
      std::string endpoint = body.value("endpoint", "");
      if (role == "producer") {
        auto id = broker_.register_producer(endpoint, body.value("slabs", 0u));
        producer_endpoints_[id] = endpoint;
        return wire::make_json(wire::Opcode::Ok, json{{"id", id}}.dump());
      }
      if (role == "consumer") {
        auto id = broker_.register_consumer(endpoint);
        return wire::make_json(wire::Opcode::Ok, json{{"id", id}}.dump());
      }
      return err_json("unknown role");
    }
    case wire::Opcode::Deregister: {
      broker_.deregister(body.value("id", 0ull));
      return wire::make_json(wire::Opcode::Ok, "{}");
    }
    case wire::Opcode::Report: {
      auto pid = body.value("producer_id", 0ull);
      try {
        broker_.report_usage(pid, body.value("free_gb", 0.0), body.value("bw", 0.0),
                             body.value("cpu", 0.0), Instant{body.value("at_ms", now.ms)});
      } catch (const std::invalid_argument&) {
        // reports arrive faster than the history step; keep the latest sample
        // cadence and still deliver pending lease assignments below
      }
      json leases = json::array();
      auto it = undelivered_.find(pid);
      if (it != undelivered_.end()) {
        for (auto lid : it->second) {
          const auto* rec = broker_.lease(lid);
          if (!rec) continue;
          std::uint32_t slabs_here = 0;
          for (const auto& p : rec->assignment.parts)
            if (p.producer_id == pid)
              slabs_here += static_cast<std::uint32_t>(p.slab_indices.size());
          leases.push_back({{"lease_id", lid},
                            {"consumer_id", rec->assignment.consumer_id},
                            {"slabs", slabs_here},
                            {"start_ms", rec->assignment.start.ms},
                            {"end_ms", rec->assignment.end.ms},
                            {"bandwidth_limit", lease_bw_.count(lid) ? lease_bw_[lid] : 0}});
        }
        undelivered_.erase(it);
      }
      return wire::make_json(wire::Opcode::Ok, json{{"leases", leases}}.dump());
    }
    case wire::Opcode::Request: {
      AllocationRequest req;
      req.consumer_id = body.value("consumer_id", 0ull);
      req.terms.slabs = body.value("slabs", 0u);
      req.terms.min_slabs = body.value("min_slabs", 1u);
      req.terms.duration = Duration{body.value("duration_ms", Millis{0})};
      req.terms.max_unit_price = Money{body.value("max_unit_price", MicroCents{0})};
      req.terms.bandwidth_limit = body.value("bandwidth_limit", 0ull);
      auto result = broker_.allocate(req, now);
      json out;
      if (result.kind == AllocateResult::Kind::Assigned) {
        const auto& a = *result.assignment;
        out = assignment_json(a, broker_);
        out["status"] = "assigned";
        lease_bw_[a.lease_id] = req.terms.bandwidth_limit;
        for (const auto& p : a.parts) undelivered_[p.producer_id].push_back(a.lease_id);
      } else if (result.kind == AllocateResult::Kind::Queued) {
        out = {{"status", "queued"}, {"reason", result.reason}};
      } else {
        out = {{"status", "rejected"}, {"reason", result.reason}};
      }
      return wire::make_json(wire::Opcode::Assign, out.dump());
    }
    case wire::Opcode::Renew: {
      auto lid = body.value("lease_id", 0ull);
      auto result = broker_.renew(lid, now);
      json out;
      if (result.kind == AllocateResult::Kind::Assigned) {
        const auto& a = *result.assignment;
        out = assignment_json(a, broker_);
        out["status"] = "assigned";
        lease_bw_[a.lease_id] = lease_bw_.count(lid) ? lease_bw_[lid] : 0;
        for (const auto& p : a.parts) undelivered_[p.producer_id].push_back(a.lease_id);
      } else {
        out = {{"status", "rejected"}, {"reason", result.reason}};
      }
      return wire::make_json(wire::Opcode::Assign, out.dump());
    }
    case wire::Opcode::EvictNotice: {
      broker_.record_eviction(body.value("lease_id", 0ull), body.value("producer_id", 0ull),
                              body.value("slabs", 0u), Instant{body.value("at_ms", now.ms)});
      return wire::make_json(wire::Opcode::Ok, "{}");
    }
    case wire::Opcode::PriceQuery: {
      if (body.contains("lease_id")) {
        auto lid = body["lease_id"].get<std::uint64_t>();
        if (!broker_.lease(lid)) return err_json("unknown lease");
        auto b = broker_.bill_lease(lid);
        return wire::make_json(wire::Opcode::Ok,
                               json{{"price", broker_.current_price().micro_cents},
                                    {"charge", b.charge.micro_cents},
                                    {"rebate", b.rebate.micro_cents},
                                    {"total", b.total.micro_cents}}
                                   .dump());
      }
      return wire::make_json(wire::Opcode::Ok,
                             json{{"price", broker_.current_price().micro_cents}}.dump());
    }
    default:
      return err_json("unsupported opcode");
  }
}

// --- ProducerServer ---

ProducerServer::ProducerServer(ProducerServerConfig cfg)
    : cfg_(cfg), manager_(cfg.total_slabs, cfg.seed, wall_clock_now()) {}

bool ProducerServer::start() {
  started_ = wall_clock_now();
  kv_port_ = kv_server_.start(cfg_.kv_port, [this](TcpConn& c) { handle_kv(c); });
  if (kv_port_ == 0) return false;
  endpoint_ = "127.0.0.1:" + std::to_string(kv_port_);

  auto conn = TcpConn::connect_to(cfg_.broker_host, cfg_.broker_port);
  if (!conn) return false;
  json reg = {{"role", "producer"}, {"endpoint", endpoint_}, {"slabs", cfg_.total_slabs}};
  if (!conn->send_frame(wire::make_json(wire::Opcode::Register, reg.dump()))) return false;
  auto reply = conn->read_frame();
  if (!reply || reply->opcode != wire::Opcode::Ok) return false;
  producer_id_ = json::parse(wire::json_payload(*reply)).value("id", 0ull);
  if (producer_id_ == 0) return false;

  report_thread_ = std::thread([this, c = std::move(*conn)]() mutable {
    TcpConn broker_conn = std::move(c);
    while (!stopping_) {
      Instant now = wall_clock_now();
      json leases_reply;
      {
        std::lock_guard lock(mu_);
        manager_.set_now(now);
        // Reclaim expired leases nobody touched. Touched ones are released by
        // the KV path, which answers LEASE_EXPIRED first; the grace keeps
        // that reply observable instead of racing the sweep.
        constexpr Millis kExpirySweepGraceMs = 10 * kMillisPerSecond;
        for (auto lid : manager_.active_leases()) {
          const auto* lease = manager_.lease_for(lid);
          if (lease && now.ms > lease->end.ms + kExpirySweepGraceMs)
            manager_.terminate_store(lid);
        }
        if (cfg_.reclaim_after.ms > 0 && !reclaim_done_ &&
            now.ms - started_.ms >= cfg_.reclaim_after.ms) {
          reclaim_done_ = true;
          for (const auto& r : manager_.reclaim(cfg_.reclaim_bytes)) {
            json notice = {{"lease_id", r.lease_id},
                           {"producer_id", producer_id_},
                           {"slabs", r.slabs_returned},
                           {"at_ms", now.ms}};
            broker_conn.send_frame(wire::make_json(wire::Opcode::EvictNotice, notice.dump()));
            broker_conn.read_frame();
          }
        }
      }
      double free_gb = static_cast<double>(manager_.free_slabs()) * kSlabSize / 1e9;
      json report = {{"producer_id", producer_id_},
                     {"free_gb", free_gb},
                     {"bw", 1e9},
                     {"cpu", 1.0},
                     {"at_ms", now.ms}};
      if (!broker_conn.send_frame(wire::make_json(wire::Opcode::Report, report.dump()))) break;
      auto r = broker_conn.read_frame();
      if (!r) break;
      if (r->opcode == wire::Opcode::Ok)
        handle_assignments(wire::json_payload(*r));
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.report_interval.ms));
    }
  });
  return true;
}

void ProducerServer::handle_assignments(const std::string& json_text) {
  json body = json::parse(json_text, nullptr, false);
  if (body.is_discarded() || !body.contains("leases")) return;
  std::lock_guard lock(mu_);
  for (const auto& l : body["leases"]) {
    LeaseBinding b;
    b.lease_id = l.value("lease_id", 0ull);
    b.consumer_id = l.value("consumer_id", 0ull);
    b.slabs = l.value("slabs", 0u);
    b.start = Instant{l.value("start_ms", Millis{0})};
    b.end = Instant{l.value("end_ms", Millis{0})};
    b.bandwidth_limit = l.value("bandwidth_limit", 0ull);
    if (b.lease_id == 0 || b.slabs == 0 || manager_.store_for(b.lease_id)) continue;
    try {
      manager_.spawn_store(b);
    } catch (const std::exception&) {
      // over-committed (slabs reclaimed since assignment); broker will see it
      // in the next report's free_gb
    }
  }
}

void ProducerServer::stop() {
  if (stopping_.exchange(true)) return;
  kv_server_.stop();
  if (report_thread_.joinable()) report_thread_.join();
}

namespace {

std::string store_key(const wire::KvRequest& req, wire::KeyMode mode) {
  if (mode == wire::KeyMode::Fixed64) {
    std::vector<std::uint8_t> k;
    wire::put_u64(k, req.fixed_key);
    return std::string(k.begin(), k.end());
  }
  return req.var_key;
}

}  // namespace

void ProducerServer::handle_kv(TcpConn& conn) {
  // handshake: one Renew frame naming the lease and the key encoding
  auto hello = conn.read_frame();
  if (!hello || hello->opcode != wire::Opcode::Renew) return;
  json h = json::parse(wire::json_payload(*hello), nullptr, false);
  if (h.is_discarded()) return;
  std::uint64_t lease_id = h.value("lease_id", 0ull);
  wire::KeyMode mode =
      h.value("key_mode", "var") == "fixed64" ? wire::KeyMode::Fixed64 : wire::KeyMode::VarLength;
  {
    std::lock_guard lock(mu_);
    if (!manager_.store_for(lease_id)) {
      conn.send_frame(wire::make_err(1));
      return;
    }
  }
  if (!conn.send_frame(wire::make_json(wire::Opcode::Ok, "{}"))) return;

  while (auto f = conn.read_frame()) {
    auto req = wire::parse_kv_request(*f, mode);
    if (!req) {
      conn.send_frame(wire::make_err(2));
      return;  // framing violations are connection-fatal
    }
    Instant now = wall_clock_now();
    wire::Frame reply;
    {
      std::lock_guard lock(mu_);
      manager_.set_now(now);
      const auto* lease = manager_.lease_for(lease_id);
      auto* store = manager_.store_for(lease_id);
      if (!lease || !store) {
        reply = wire::Frame{wire::Opcode::Evicted, {}};
      } else if (now > lease->end) {
        manager_.terminate_store(lease_id);
        reply = wire::Frame{wire::Opcode::LeaseExpired, {}};
      } else {
        std::string key = store_key(*req, mode);
        auto* bucket = manager_.bucket_for(lease_id);
        auto admit = [&](ByteSize io) {
          if (!bucket || bucket->admit(io, now) == TokenBucket::Admit::Allow) return true;
          ByteSize have = bucket->tokens();
          ByteSize deficit = io > have ? io - have : 1;
          std::uint32_t retry = static_cast<std::uint32_t>(
              (deficit * 1000 + bucket->rate() - 1) / std::max<ByteSize>(bucket->rate(), 1));
          reply = wire::make_rate_limited(std::max<std::uint32_t>(retry, 1));
          return false;
        };
        switch (req->op) {
          case wire::Opcode::Ping:
            reply = wire::Frame{wire::Opcode::Ok, {}};
            break;
          case wire::Opcode::Get: {
            auto v = store->get(key, now);
            if (!v) {
              reply = wire::Frame{wire::Opcode::NotFound, {}};
            } else if (admit(key.size() + v->size())) {
              reply = wire::make_value_reply(*v);
            }
            break;
          }
          case wire::Opcode::Put: {
            if (!admit(key.size() + req->value.size())) break;
            try {
              store->put(key, std::move(req->value), now);
              reply = wire::Frame{wire::Opcode::Ok, {}};
            } catch (const std::invalid_argument&) {
              reply = wire::make_err(3);  // value larger than the lease
            }
            break;
          }
          case wire::Opcode::Delete:
            store->erase(key);
            reply = wire::Frame{wire::Opcode::Ok, {}};
            break;
          default:
            reply = wire::make_err(2);
            break;
        }
      }
    }
    if (!conn.send_frame(reply)) return;
  }
}

// --- BrokerClient ---

bool BrokerClient::connect(const std::string& host, std::uint16_t port) {
  std::lock_guard lock(mu_);
  conn_ = TcpConn::connect_to(host, port);
  return conn_.has_value();
}

std::optional<wire::Frame> BrokerClient::round_trip(const wire::Frame& f) {
  std::lock_guard lock(mu_);
  if (!conn_ || !conn_->send_frame(f)) return std::nullopt;
  return conn_->read_frame();
}

std::optional<std::uint64_t> BrokerClient::register_consumer(const std::string& endpoint) {
  json body = {{"role", "consumer"}, {"endpoint", endpoint}};
  auto r = round_trip(wire::make_json(wire::Opcode::Register, body.dump()));
  if (!r || r->opcode != wire::Opcode::Ok) return std::nullopt;
  auto id = json::parse(wire::json_payload(*r), nullptr, false).value("id", 0ull);
  if (id == 0) return std::nullopt;
  return id;
}

std::optional<BrokerClient::LeaseGrant> BrokerClient::request_lease(std::uint64_t consumer_id,
                                                                    std::uint32_t slabs,
                                                                    std::uint32_t min_slabs,
                                                                    Duration duration) {
  json body = {{"consumer_id", consumer_id},
               {"slabs", slabs},
               {"min_slabs", min_slabs},
               {"duration_ms", duration.ms}};
  auto r = round_trip(wire::make_json(wire::Opcode::Request, body.dump()));
  if (!r || r->opcode != wire::Opcode::Assign) return std::nullopt;
  json out = json::parse(wire::json_payload(*r), nullptr, false);
  if (out.is_discarded() || out.value("status", "") != "assigned") return std::nullopt;
  LeaseGrant g;
  g.lease_id = out.value("lease_id", 0ull);
  g.unit_price = Money{out.value("unit_price", MicroCents{0})};
  g.start = Instant{out.value("start_ms", Millis{0})};
  g.end = Instant{out.value("end_ms", Millis{0})};
  for (const auto& p : out.value("parts", json::array()))
    g.parts.push_back({p.value("producer_id", 0ull), p.value("endpoint", ""),
                       p.value("slabs", 0u)});
  return g;
}

std::optional<Money> BrokerClient::price_query() {
  auto r = round_trip(wire::make_json(wire::Opcode::PriceQuery, "{}"));
  if (!r || r->opcode != wire::Opcode::Ok) return std::nullopt;
  return Money{json::parse(wire::json_payload(*r), nullptr, false)
                   .value("price", MicroCents{0})};
}

std::optional<BrokerClient::LeaseBill> BrokerClient::lease_bill(std::uint64_t lease_id) {
  json body = {{"lease_id", lease_id}};
  auto r = round_trip(wire::make_json(wire::Opcode::PriceQuery, body.dump()));
  if (!r || r->opcode != wire::Opcode::Ok) return std::nullopt;
  json out = json::parse(wire::json_payload(*r), nullptr, false);
  if (out.is_discarded()) return std::nullopt;
  LeaseBill b;
  b.charge = Money{out.value("charge", MicroCents{0})};
  b.rebate = Money{out.value("rebate", MicroCents{0})};
  b.total = Money{out.value("total", MicroCents{0})};
  return b;
}

// --- NetRemoteStore ---

std::shared_ptr<NetRemoteStore> NetRemoteStore::open(const std::string& host, std::uint16_t port,
                                                     std::uint64_t lease_id, SecurityMode mode) {
  auto conn = TcpConn::connect_to(host, port);
  if (!conn) return nullptr;
  wire::KeyMode km =
      mode == SecurityMode::Full ? wire::KeyMode::Fixed64 : wire::KeyMode::VarLength;
  json hello = {{"lease_id", lease_id},
                {"key_mode", km == wire::KeyMode::Fixed64 ? "fixed64" : "var"}};
  if (!conn->send_frame(wire::make_json(wire::Opcode::Renew, hello.dump()))) return nullptr;
  auto r = conn->read_frame();
  if (!r || r->opcode != wire::Opcode::Ok) return nullptr;
  return std::shared_ptr<NetRemoteStore>(new NetRemoteStore(std::move(*conn), km));
}

namespace {

// Fixed64 sessions carry the 8-byte substitute key produced by the client.
std::uint64_t fixed_key_of(const std::string& key) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8 && i < key.size(); ++i)
    v = (v << 8) | static_cast<std::uint8_t>(key[i]);
  return v;
}

}  // namespace

RemoteStore::Status NetRemoteStore::request(const wire::KvRequest& req,
                                            std::vector<std::uint8_t>* value,
                                            std::uint32_t* retry_after_ms) {
  std::lock_guard lock(mu_);
  if (!conn_.send_frame(wire::make_kv_request(req, mode_))) return Status::Error;
  auto r = conn_.read_frame();
  if (!r) return Status::Error;
  switch (r->opcode) {
    case wire::Opcode::Ok:
      return Status::Ok;
    case wire::Opcode::Value:
      if (value) {
        auto v = wire::parse_value_reply(*r);
        if (!v) return Status::Error;
        *value = std::move(*v);
      }
      return Status::Ok;
    case wire::Opcode::NotFound:
      return Status::NotFound;
    case wire::Opcode::Evicted:
      return Status::Evicted;
    case wire::Opcode::RateLimited:
      if (retry_after_ms) *retry_after_ms = wire::parse_rate_limited(*r).value_or(1);
      return Status::RateLimited;
    case wire::Opcode::LeaseExpired:
      return Status::LeaseExpired;
    default:
      return Status::Error;
  }
}

RemoteStore::Status NetRemoteStore::put(const std::string& key,
                                        std::span<const std::uint8_t> value,
                                        std::uint32_t* retry_after_ms) {
  wire::KvRequest req;
  req.op = wire::Opcode::Put;
  if (mode_ == wire::KeyMode::Fixed64)
    req.fixed_key = fixed_key_of(key);
  else
    req.var_key = key;
  req.value.assign(value.begin(), value.end());
  return request(req, nullptr, retry_after_ms);
}

RemoteStore::Status NetRemoteStore::get(const std::string& key, std::vector<std::uint8_t>* value,
                                        std::uint32_t* retry_after_ms) {
  wire::KvRequest req;
  req.op = wire::Opcode::Get;
  if (mode_ == wire::KeyMode::Fixed64)
    req.fixed_key = fixed_key_of(key);
  else
    req.var_key = key;
  return request(req, value, retry_after_ms);
}

RemoteStore::Status NetRemoteStore::del(const std::string& key) {
  wire::KvRequest req;
  req.op = wire::Opcode::Delete;
  if (mode_ == wire::KeyMode::Fixed64)
    req.fixed_key = fixed_key_of(key);
  else
    req.var_key = key;
  return request(req, nullptr, nullptr);
}

}  // namespace mm::net
