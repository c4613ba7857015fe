#include <doctest.h>

#include <map>
#include <memory>
#include <random>

#include "memmarket/client.hpp"
#include "memmarket/crypto.hpp"

using namespace mm;

namespace {

// In-process producer-side store: exactly the transport surface, nothing else.
// Exposes its map so tests can corrupt stored bytes at chosen positions.
struct FakeRemoteStore : RemoteStore {
  std::map<std::string, std::vector<std::uint8_t>> data;
  Status forced_status = Status::Ok;

  Status put(const std::string& key, std::span<const std::uint8_t> value,
             std::uint32_t* retry) override {
    if (forced_status != Status::Ok) {
      if (forced_status == Status::RateLimited && retry) *retry = 250;
      return forced_status;
    }
    data[key].assign(value.begin(), value.end());
    return Status::Ok;
  }
  Status get(const std::string& key, std::vector<std::uint8_t>* value,
             std::uint32_t*) override {
    if (forced_status != Status::Ok) return forced_status;
    auto it = data.find(key);
    if (it == data.end()) return Status::NotFound;
    *value = it->second;
    return Status::Ok;
  }
  Status del(const std::string& key) override {
    data.erase(key);
    return Status::Ok;
  }
};

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng());
  return v;
}

MissRatioCurve exp_like_mrc() {
  // convex, decreasing, with exactly-representable knots so hand-computed
  // expectations below are floor-stable
  return MissRatioCurve(
      {{0.0, 0.9375}, {1.0, 0.5}, {2.0, 0.25}, {4.0, 0.125}, {8.0, 0.0625}});
}

}  // namespace

TEST_SUITE("crypto_client") {

TEST_CASE("seal/open round-trips, including the empty plaintext") {
  auto key = crypto::random_key();
  std::mt19937_64 rng(41);
  for (std::size_t len : {0u, 1u, 15u, 16u, 17u, 255u, 4096u}) {
    auto pt = random_bytes(rng, len);
    auto sealed = crypto::seal(key, pt);
    // IV plus at least one padding block, always block-aligned
    CHECK(sealed.size() >= crypto::kIvBytes + 16);
    CHECK((sealed.size() - crypto::kIvBytes) % 16 == 0);
    CHECK(crypto::open(key, sealed) == pt);
  }
  // fresh IVs: equal plaintexts never produce equal ciphertexts
  std::vector<std::uint8_t> pt{1, 2, 3};
  CHECK(crypto::seal(key, pt) != crypto::seal(key, pt));
}

TEST_CASE("opening with the wrong key or truncated input fails") {
  auto k1 = crypto::random_key();
  auto k2 = crypto::random_key();
  auto sealed = crypto::seal(k1, std::vector<std::uint8_t>(40, 0x5A));
  CHECK_THROWS(crypto::open(k2, sealed));
  sealed.resize(crypto::kIvBytes + 8);  // not block-aligned
  CHECK_THROWS(crypto::open(k1, sealed));
}

TEST_CASE("the hash is sha-256 truncated to 16 bytes") {
  // SHA-256("abc") = ba7816bf8f01cfea414140de5dae2223...
  std::vector<std::uint8_t> abc{'a', 'b', 'c'};
  auto h = crypto::truncated_sha256(abc);
  crypto::TruncatedHash expect{0xba, 0x78, 0x16, 0xbf, 0x8f, 0x01, 0xcf, 0xea,
                               0x41, 0x41, 0x40, 0xde, 0x5d, 0xae, 0x22, 0x23};
  CHECK(h == expect);
}

TEST_CASE("per-entry metadata overhead by mode") {
  CHECK(metadata_overhead_bytes(SecurityMode::Full) == 24);
  CHECK(metadata_overhead_bytes(SecurityMode::IntegrityOnly) == 16);
  CHECK(metadata_overhead_bytes(SecurityMode::Plain) == 0);
}

TEST_CASE("kv round-trips in all three modes") {
  std::mt19937_64 rng(42);
  for (SecurityMode mode :
       {SecurityMode::Full, SecurityMode::IntegrityOnly, SecurityMode::Plain}) {
    auto store = std::make_shared<FakeRemoteStore>();
    SecureKvClient c(mode, crypto::random_key());
    c.add_producer(store);
    CHECK(c.local_overhead_per_entry() == metadata_overhead_bytes(mode));

    std::map<std::string, std::vector<std::uint8_t>> model;
    for (int i = 0; i < 200; ++i) {
      std::string key = "user:" + std::to_string(i);
      auto value = random_bytes(rng, std::uniform_int_distribution<std::size_t>(0, 300)(rng));
      CHECK(c.put(key, value) == PutStatus::Ok);
      model[key] = std::move(value);
    }
    CHECK(c.index_size() == 200);
    for (const auto& [k, v] : model) {
      auto r = c.get(k);
      REQUIRE(r.outcome == GetResult::Outcome::Found);
      CHECK(r.value == v);
    }
    CHECK(c.get("missing").outcome == GetResult::Outcome::NotFound);

    c.del("user:0");
    CHECK(c.get("user:0").outcome == GetResult::Outcome::NotFound);
    CHECK(c.index_size() == 199);
    c.del("user:0");  // idempotent
  }
}

TEST_CASE("full mode hides consumer keys behind 8-byte counters") {
  auto store = std::make_shared<FakeRemoteStore>();
  SecureKvClient c(SecurityMode::Full, crypto::random_key());
  c.add_producer(store);
  c.put("a-very-identifying-key-name", std::vector<std::uint8_t>{1});
  REQUIRE(store->data.size() == 1);
  CHECK(store->data.begin()->first.size() == 8);
  // and the stored bytes are not the plaintext
  CHECK(store->data.begin()->second != std::vector<std::uint8_t>{1});

  auto plain_store = std::make_shared<FakeRemoteStore>();
  SecureKvClient p(SecurityMode::Plain, crypto::random_key());
  p.add_producer(plain_store);
  p.put("visible", std::vector<std::uint8_t>{1});
  CHECK(plain_store->data.count("visible") == 1);
}

TEST_CASE("tampering is detected in the secure modes and not in plain") {
  std::mt19937_64 rng(43);
  for (SecurityMode mode : {SecurityMode::Full, SecurityMode::IntegrityOnly}) {
    auto store = std::make_shared<FakeRemoteStore>();
    SecureKvClient c(mode, crypto::random_key());
    c.add_producer(store);
    c.put("k", random_bytes(rng, 64));
    auto& stored = store->data.begin()->second;
    stored[stored.size() / 2] ^= 0x01;  // single flipped bit
    auto r = c.get("k");
    CHECK(r.outcome == GetResult::Outcome::IntegrityViolation);
    CHECK(r.value.empty());
    CHECK(c.index_size() == 0);  // poisoned metadata is dropped
    CHECK(c.get("k").outcome == GetResult::Outcome::NotFound);
  }

  auto store = std::make_shared<FakeRemoteStore>();
  SecureKvClient c(SecurityMode::Plain, crypto::random_key());
  c.add_producer(store);
  c.put("k", std::vector<std::uint8_t>{10, 20, 30});
  store->data["k"][0] = 99;
  auto r = c.get("k");
  CHECK(r.outcome == GetResult::Outcome::Found);  // plain mode trusts the producer
  CHECK(r.value == std::vector<std::uint8_t>{99, 20, 30});
}

TEST_CASE("producer failures surface as cache semantics") {
  auto store = std::make_shared<FakeRemoteStore>();
  SecureKvClient c(SecurityMode::Full, crypto::random_key());
  CHECK(c.put("k", std::vector<std::uint8_t>{1}) == PutStatus::NoCapacity);  // no producers

  c.add_producer(store);
  store->forced_status = RemoteStore::Status::RateLimited;
  std::uint32_t retry = 0;
  CHECK(c.put("k", std::vector<std::uint8_t>{1}, &retry) == PutStatus::RateLimited);
  CHECK(retry == 250);
  store->forced_status = RemoteStore::Status::LeaseExpired;
  CHECK(c.put("k", std::vector<std::uint8_t>{1}) == PutStatus::NoCapacity);

  store->forced_status = RemoteStore::Status::Ok;
  c.put("k", std::vector<std::uint8_t>{1});
  store->forced_status = RemoteStore::Status::Evicted;
  CHECK(c.get("k").outcome == GetResult::Outcome::NotFound);
}

TEST_CASE("puts spread round-robin across producers") {
  auto s1 = std::make_shared<FakeRemoteStore>();
  auto s2 = std::make_shared<FakeRemoteStore>();
  SecureKvClient c(SecurityMode::Plain, crypto::random_key());
  c.add_producer(s1);
  c.add_producer(s2);
  for (int i = 0; i < 10; ++i) c.put("k" + std::to_string(i), std::vector<std::uint8_t>{1});
  CHECK(s1->data.size() == 5);
  CHECK(s2->data.size() == 5);
}

TEST_CASE("value of memory follows the price-per-hit accounting") {
  auto mrc = exp_like_mrc();
  // at 1 GB: miss .5, hit rate .5; vm $0.036/h = 3.6e6 micro-cents, 100 req/s
  // price per hit = 3.6e6 / (360000 * .5) = 20 micro-cents
  // +1 GB removes .25 miss ratio -> 90000 extra hits/h; discount .5
  // value = .5 * 20 * 90000 = 900'000, every factor exact in binary
  Money v = value_of_memory(mrc, 1.0, 1.0, Money{3'600'000}, 100.0, 0.5);
  CHECK(v == Money{900'000});
  // beyond the curve there is nothing left to win
  CHECK(value_of_memory(mrc, 8.0, 1.0, Money{3'600'000}, 100.0, 0.5) == Money{0});
  CHECK(value_of_memory(mrc, 1.0, 1.0, Money{3'600'000}, 0.0, 0.5) == Money{0});
}

TEST_CASE("purchase decisions shrink monotonically with price") {
  auto mrc = exp_like_mrc();
  Money vm{3'600'000};
  double prev = 1e18;
  for (MicroCents price : {1'000, 50'000, 500'000, 5'000'000, 500'000'000}) {
    double gb = purchase_decision(mrc, Money{price}, 0.5, vm, 100.0, 0.8);
    CHECK(gb <= prev);
    CHECK(gb >= 0.0);
    CHECK(gb + 0.5 <= mrc.max_gb() + 1e-9);
    prev = gb;
  }
  // absurd prices buy nothing; absurdly cheap memory fills the curve
  CHECK(purchase_decision(mrc, Money{500'000'000}, 0.5, vm, 100.0, 0.8) == 0.0);
  CHECK(purchase_decision(mrc, Money{1}, 0.5, vm, 100.0, 0.8) > 6.0);
}

}  // TEST_SUITE
