#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memmarket/core.hpp"

// Length-prefixed binary framing: [4-byte BE length][1-byte opcode][payload],
// where length covers opcode + payload. See docs/protocol.md for layouts.

namespace mm::wire {

inline constexpr std::size_t kMaxPayload = 16 * 1024 * 1024;

enum class Opcode : std::uint8_t {
  // KV requests
  Get = 0x01,
  Put = 0x02,
  Delete = 0x03,
  Ping = 0x04,
  // replies
  Ok = 0x80,
  Value = 0x81,
  NotFound = 0x82,
  RateLimited = 0x83,
  Evicted = 0x84,
  LeaseExpired = 0x85,
  Err = 0xFF,
  // broker control
  Register = 0x10,
  Deregister = 0x11,
  Report = 0x12,
  Request = 0x13,
  Assign = 0x14,
  Renew = 0x15,
  EvictNotice = 0x16,
  PriceQuery = 0x17,
};

struct Frame {
  Opcode opcode = Opcode::Ping;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

enum class DecodeStatus { Ok, NeedMore, Malformed };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMore;
  Frame frame;
  std::size_t consumed = 0;  // zero unless status == Ok
};

std::vector<std::uint8_t> encode(const Frame& f);

// Decodes one frame from the front of `data`. Never reads past the frame
// boundary; on NeedMore nothing is consumed. Malformed lengths (zero, or
// past the payload cap) are connection-fatal.
DecodeResult decode(std::span<const std::uint8_t> data);

// Streaming decoder, one per connection.
class Decoder {
 public:
  void feed(std::span<const std::uint8_t> data);
  std::optional<Frame> next();  // nullopt = need more bytes or failed
  bool failed() const { return failed_; }

 private:
  std::vector<std::uint8_t> buf_;
  bool failed_ = false;
};

// --- big-endian scalar helpers ---

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
  put_u32(out, static_cast<std::uint32_t>(v));
}
inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
std::optional<std::uint32_t> get_u32(std::span<const std::uint8_t> in, std::size_t& off);
std::optional<std::uint64_t> get_u64(std::span<const std::uint8_t> in, std::size_t& off);
std::optional<std::uint16_t> get_u16(std::span<const std::uint8_t> in, std::size_t& off);

// --- KV message layouts ---
// Full-security sessions carry fixed 8-byte counter keys; integrity-only and
// plain sessions carry length-prefixed keys (u16 length).

enum class KeyMode { Fixed64, VarLength };

struct KvRequest {
  Opcode op = Opcode::Get;
  std::uint64_t fixed_key = 0;  // Fixed64
  std::string var_key;          // VarLength
  std::vector<std::uint8_t> value;  // Put only
};

Frame make_kv_request(const KvRequest& r, KeyMode mode);
std::optional<KvRequest> parse_kv_request(const Frame& f, KeyMode mode);

Frame make_value_reply(std::span<const std::uint8_t> value);
std::optional<std::vector<std::uint8_t>> parse_value_reply(const Frame& f);

Frame make_rate_limited(std::uint32_t retry_after_ms);
std::optional<std::uint32_t> parse_rate_limited(const Frame& f);

Frame make_err(std::uint32_t code);

// Control frames carry UTF-8 JSON payloads.
Frame make_json(Opcode op, const std::string& json_text);
std::string json_payload(const Frame& f);

}  // namespace mm::wire
