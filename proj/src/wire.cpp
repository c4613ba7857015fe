#include "memmarket/wire.hpp"

#include <algorithm>

namespace mm::wire {

std::vector<std::uint8_t> encode(const Frame& f) {
  if (f.payload.size() > kMaxPayload) throw std::length_error("payload exceeds 16 MiB cap");
  std::vector<std::uint8_t> out;
  out.reserve(5 + f.payload.size());
  put_u32(out, static_cast<std::uint32_t>(1 + f.payload.size()));
  out.push_back(static_cast<std::uint8_t>(f.opcode));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> data) {
  if (data.size() < 4) return {DecodeStatus::NeedMore, {}, 0};
  std::uint32_t len = (std::uint32_t(data[0]) << 24) | (std::uint32_t(data[1]) << 16) |
                      (std::uint32_t(data[2]) << 8) | std::uint32_t(data[3]);
  if (len == 0 || len > 1 + kMaxPayload) return {DecodeStatus::Malformed, {}, 0};
  if (data.size() < 4 + static_cast<std::size_t>(len)) return {DecodeStatus::NeedMore, {}, 0};
  Frame f;
  f.opcode = static_cast<Opcode>(data[4]);
  f.payload.assign(data.begin() + 5, data.begin() + 4 + len);
  return {DecodeStatus::Ok, std::move(f), 4 + static_cast<std::size_t>(len)};
}

void Decoder::feed(std::span<const std::uint8_t> data) {
  if (failed_) return;
  buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Frame> Decoder::next() {
  if (failed_) return std::nullopt;
  auto r = decode(buf_);
  if (r.status == DecodeStatus::Malformed) {
    failed_ = true;
    return std::nullopt;
  }
  if (r.status == DecodeStatus::NeedMore) return std::nullopt;
  buf_.erase(buf_.begin(), buf_.begin() + r.consumed);
  return std::move(r.frame);
}

std::optional<std::uint32_t> get_u32(std::span<const std::uint8_t> in, std::size_t& off) {
  if (in.size() < off + 4) return std::nullopt;
  std::uint32_t v = (std::uint32_t(in[off]) << 24) | (std::uint32_t(in[off + 1]) << 16) |
                    (std::uint32_t(in[off + 2]) << 8) | std::uint32_t(in[off + 3]);
  off += 4;
  return v;
}

std::optional<std::uint64_t> get_u64(std::span<const std::uint8_t> in, std::size_t& off) {
  auto hi = get_u32(in, off);
  if (!hi) return std::nullopt;
  auto lo = get_u32(in, off);
  if (!lo) return std::nullopt;
  return (std::uint64_t(*hi) << 32) | *lo;
}

std::optional<std::uint16_t> get_u16(std::span<const std::uint8_t> in, std::size_t& off) {
  if (in.size() < off + 2) return std::nullopt;
  std::uint16_t v = static_cast<std::uint16_t>((in[off] << 8) | in[off + 1]);
  off += 2;
  return v;
}

Frame make_kv_request(const KvRequest& r, KeyMode mode) {
  Frame f;
  f.opcode = r.op;
  if (mode == KeyMode::Fixed64) {
    put_u64(f.payload, r.fixed_key);
  } else {
    put_u16(f.payload, static_cast<std::uint16_t>(r.var_key.size()));
    f.payload.insert(f.payload.end(), r.var_key.begin(), r.var_key.end());
  }
  if (r.op == Opcode::Put) {
    put_u32(f.payload, static_cast<std::uint32_t>(r.value.size()));
    f.payload.insert(f.payload.end(), r.value.begin(), r.value.end());
  }
  return f;
}

std::optional<KvRequest> parse_kv_request(const Frame& f, KeyMode mode) {
  if (f.opcode != Opcode::Get && f.opcode != Opcode::Put && f.opcode != Opcode::Delete)
    return std::nullopt;
  KvRequest r;
  r.op = f.opcode;
  std::size_t off = 0;
  if (mode == KeyMode::Fixed64) {
    auto k = get_u64(f.payload, off);
    if (!k) return std::nullopt;
    r.fixed_key = *k;
  } else {
    auto klen = get_u16(f.payload, off);
    if (!klen || f.payload.size() < off + *klen) return std::nullopt;
    r.var_key.assign(f.payload.begin() + off, f.payload.begin() + off + *klen);
    off += *klen;
  }
  if (r.op == Opcode::Put) {
    auto vlen = get_u32(f.payload, off);
    if (!vlen || f.payload.size() < off + *vlen) return std::nullopt;
    r.value.assign(f.payload.begin() + off, f.payload.begin() + off + *vlen);
    off += *vlen;
  }
  if (off != f.payload.size()) return std::nullopt;  // trailing junk
  return r;
}

Frame make_value_reply(std::span<const std::uint8_t> value) {
  Frame f;
  f.opcode = Opcode::Value;
  put_u32(f.payload, static_cast<std::uint32_t>(value.size()));
  f.payload.insert(f.payload.end(), value.begin(), value.end());
  return f;
}

std::optional<std::vector<std::uint8_t>> parse_value_reply(const Frame& f) {
  if (f.opcode != Opcode::Value) return std::nullopt;
  std::size_t off = 0;
  auto len = get_u32(f.payload, off);
  if (!len || f.payload.size() != off + *len) return std::nullopt;
  return std::vector<std::uint8_t>(f.payload.begin() + off, f.payload.end());
}

Frame make_rate_limited(std::uint32_t retry_after_ms) {
  Frame f;
  f.opcode = Opcode::RateLimited;
  put_u32(f.payload, retry_after_ms);
  return f;
}

std::optional<std::uint32_t> parse_rate_limited(const Frame& f) {
  if (f.opcode != Opcode::RateLimited) return std::nullopt;
  std::size_t off = 0;
  return get_u32(f.payload, off);
}

Frame make_err(std::uint32_t code) {
  Frame f;
  f.opcode = Opcode::Err;
  put_u32(f.payload, code);
  return f;
}

Frame make_json(Opcode op, const std::string& json_text) {
  Frame f;
  f.opcode = op;
  f.payload.assign(json_text.begin(), json_text.end());
  return f;
}

std::string json_payload(const Frame& f) {
  return std::string(f.payload.begin(), f.payload.end());
}

}  // namespace mm::wire
