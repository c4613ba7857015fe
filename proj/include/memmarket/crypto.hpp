#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mm::crypto {

inline constexpr std::size_t kKeyBytes = 16;   // AES-128
inline constexpr std::size_t kIvBytes = 16;
inline constexpr std::size_t kHashBytes = 16;  // SHA-256 truncated to 128 bits

using SecretKey = std::array<std::uint8_t, kKeyBytes>;
using Iv = std::array<std::uint8_t, kIvBytes>;
using TruncatedHash = std::array<std::uint8_t, kHashBytes>;

SecretKey random_key();
Iv random_iv();

// AES-128-CBC with PKCS#7 padding. seal() prepends the fresh IV, so the
// output is IV || ciphertext. open() strips it back off; returns empty
// optional-style by throwing on bad padding.
std::vector<std::uint8_t> seal(const SecretKey& key, std::span<const std::uint8_t> plaintext);
std::vector<std::uint8_t> open(const SecretKey& key, std::span<const std::uint8_t> sealed);

TruncatedHash truncated_sha256(std::span<const std::uint8_t> data);

}  // namespace mm::crypto
