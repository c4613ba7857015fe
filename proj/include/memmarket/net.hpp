#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "memmarket/broker.hpp"
#include "memmarket/client.hpp"
#include "memmarket/pricing.hpp"
#include "memmarket/store.hpp"
#include "memmarket/wire.hpp"

// Blocking TCP transport for the wire protocol. One thread per connection;
// per-connection replies stay in request order.

namespace mm::net {

Instant wall_clock_now();

class TcpConn {
 public:
  explicit TcpConn(int fd) : fd_(fd) {}
  TcpConn(const TcpConn&) = delete;
  TcpConn& operator=(const TcpConn&) = delete;
  TcpConn(TcpConn&& o) noexcept : fd_(o.fd_), decoder_(std::move(o.decoder_)) { o.fd_ = -1; }
  TcpConn& operator=(TcpConn&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = o.fd_;
      decoder_ = std::move(o.decoder_);
      o.fd_ = -1;
    }
    return *this;
  }
  ~TcpConn();

  static std::optional<TcpConn> connect_to(const std::string& host, std::uint16_t port);

  bool send_frame(const wire::Frame& f);
  // Blocks until one frame arrives; nullopt on EOF or protocol error.
  std::optional<wire::Frame> read_frame();

  bool ok() const { return fd_ >= 0; }
  void close();

 private:
  int fd_ = -1;
  wire::Decoder decoder_;
};

class FrameServer {
 public:
  using Handler = std::function<void(TcpConn&)>;

  FrameServer() = default;
  ~FrameServer() { stop(); }

  // Binds and listens; port 0 picks an ephemeral port. Returns bound port.
  std::uint16_t start(std::uint16_t port, Handler handler);
  void stop();

 private:
  void accept_loop();

  int listen_fd_ = -1;
  Handler handler_;
  std::thread accept_thread_;
  std::vector<std::thread> conn_threads_;
  std::mutex mu_;
  std::atomic<bool> stopping_{false};
};

// --- broker process ---

struct BrokerServerConfig {
  std::uint16_t port = 0;  // 0 = ephemeral
  BrokerConfig broker;
  Money initial_unit_price{250};
  std::optional<std::string> snapshot_path;
  Duration tick_interval{200};
};

class BrokerServer {
 public:
  explicit BrokerServer(BrokerServerConfig cfg);
  ~BrokerServer() { stop(); }

  std::uint16_t start();
  void stop();
  std::uint16_t port() const { return port_; }

  Broker& broker() { return broker_; }  // test access; guard with lock()
  std::unique_lock<std::mutex> lock() { return std::unique_lock(mu_); }

 private:
  void handle(TcpConn& conn);
  wire::Frame dispatch(const wire::Frame& f);

  BrokerServerConfig cfg_;
  Broker broker_;
  std::mutex mu_;
  FrameServer server_;
  std::thread tick_thread_;
  std::atomic<bool> stopping_{false};
  std::uint16_t port_ = 0;
  // leases assigned but not yet delivered to their producer via Report
  std::map<std::uint64_t, std::vector<std::uint64_t>> undelivered_;
  std::map<std::uint64_t, std::string> producer_endpoints_;
  std::map<std::uint64_t, ByteSize> lease_bw_;  // lease_id -> bandwidth cap
};

// --- producer process ---

struct ProducerServerConfig {
  std::string broker_host = "127.0.0.1";
  std::uint16_t broker_port = 0;
  std::uint16_t kv_port = 0;
  std::uint32_t total_slabs = 16;
  Duration report_interval{500};
  std::uint64_t seed = 1;
  // test hook: trigger an early reclamation this long after start (0 = never)
  Duration reclaim_after{0};
  ByteSize reclaim_bytes = 0;
};

class ProducerServer {
 public:
  explicit ProducerServer(ProducerServerConfig cfg);
  ~ProducerServer() { stop(); }

  bool start();
  void stop();
  std::uint16_t kv_port() const { return kv_port_; }
  std::uint64_t producer_id() const { return producer_id_; }

 private:
  void handle_kv(TcpConn& conn);
  void report_loop();
  void handle_assignments(const std::string& json_text);

  ProducerServerConfig cfg_;
  StoreManager manager_;
  std::mutex mu_;
  FrameServer kv_server_;
  std::thread report_thread_;
  std::atomic<bool> stopping_{false};
  std::uint64_t producer_id_ = 0;
  std::uint16_t kv_port_ = 0;
  std::string endpoint_;
  bool reclaim_done_ = false;
  Instant started_{};
};

// --- consumer-side transports ---

// Broker control-channel client.
class BrokerClient {
 public:
  bool connect(const std::string& host, std::uint16_t port);
  std::optional<std::uint64_t> register_consumer(const std::string& endpoint);

  struct AssignedPart {
    std::uint64_t producer_id;
    std::string endpoint;
    std::uint32_t slabs;
  };
  struct LeaseGrant {
    std::uint64_t lease_id = 0;
    Money unit_price{0};
    Instant start{};
    Instant end{};
    std::vector<AssignedPart> parts;
  };
  // nullopt = queued or rejected
  std::optional<LeaseGrant> request_lease(std::uint64_t consumer_id, std::uint32_t slabs,
                                          std::uint32_t min_slabs, Duration duration);
  std::optional<Money> price_query();
  struct LeaseBill {
    Money charge{0}, rebate{0}, total{0};
  };
  std::optional<LeaseBill> lease_bill(std::uint64_t lease_id);

 private:
  std::optional<wire::Frame> round_trip(const wire::Frame& f);
  std::optional<TcpConn> conn_;
  std::mutex mu_;
};

// RemoteStore over one KV connection to a producer store.
class NetRemoteStore : public RemoteStore {
 public:
  static std::shared_ptr<NetRemoteStore> open(const std::string& host, std::uint16_t port,
                                              std::uint64_t lease_id, SecurityMode mode);

  Status put(const std::string& key, std::span<const std::uint8_t> value,
             std::uint32_t* retry_after_ms) override;
  Status get(const std::string& key, std::vector<std::uint8_t>* value,
             std::uint32_t* retry_after_ms) override;
  Status del(const std::string& key) override;

 private:
  NetRemoteStore(TcpConn conn, wire::KeyMode mode) : conn_(std::move(conn)), mode_(mode) {}
  Status request(const wire::KvRequest& req, std::vector<std::uint8_t>* value,
                 std::uint32_t* retry_after_ms);

  TcpConn conn_;
  wire::KeyMode mode_;
  std::mutex mu_;
};

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& endpoint);

}  // namespace mm::net
