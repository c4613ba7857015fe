#include "memmarket/crypto.hpp"

#include <stdexcept>

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

namespace mm::crypto {

namespace {
struct CipherCtx {
  EVP_CIPHER_CTX* ctx;
  CipherCtx() : ctx(EVP_CIPHER_CTX_new()) {
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  }
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
};
}  // namespace

SecretKey random_key() {
  SecretKey k{};
  if (RAND_bytes(k.data(), static_cast<int>(k.size())) != 1)
    throw std::runtime_error("RAND_bytes failed");
  return k;
}

Iv random_iv() {
  Iv iv{};
  if (RAND_bytes(iv.data(), static_cast<int>(iv.size())) != 1)
    throw std::runtime_error("RAND_bytes failed");
  return iv;
}

std::vector<std::uint8_t> seal(const SecretKey& key, std::span<const std::uint8_t> plaintext) {
  Iv iv = random_iv();
  CipherCtx c;
  if (EVP_EncryptInit_ex(c.ctx, EVP_aes_128_cbc(), nullptr, key.data(), iv.data()) != 1)
    throw std::runtime_error("EncryptInit failed");
  std::vector<std::uint8_t> out(kIvBytes + plaintext.size() + kIvBytes);
  std::copy(iv.begin(), iv.end(), out.begin());
  int len1 = 0;
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(c.ctx, out.data() + kIvBytes, &len1, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    throw std::runtime_error("EncryptUpdate failed");
  int len2 = 0;
  if (EVP_EncryptFinal_ex(c.ctx, out.data() + kIvBytes + len1, &len2) != 1)
    throw std::runtime_error("EncryptFinal failed");
  out.resize(kIvBytes + len1 + len2);
  return out;
}

std::vector<std::uint8_t> open(const SecretKey& key, std::span<const std::uint8_t> sealed) {
  if (sealed.size() < kIvBytes || (sealed.size() - kIvBytes) % kIvBytes != 0)
    throw std::invalid_argument("sealed blob too short or misaligned");
  CipherCtx c;
  if (EVP_DecryptInit_ex(c.ctx, EVP_aes_128_cbc(), nullptr, key.data(), sealed.data()) != 1)
    throw std::runtime_error("DecryptInit failed");
  std::vector<std::uint8_t> out(sealed.size());
  int len1 = 0;
  if (EVP_DecryptUpdate(c.ctx, out.data(), &len1, sealed.data() + kIvBytes,
                        static_cast<int>(sealed.size() - kIvBytes)) != 1)
    throw std::runtime_error("DecryptUpdate failed");
  int len2 = 0;
  if (EVP_DecryptFinal_ex(c.ctx, out.data() + len1, &len2) != 1)
    throw std::invalid_argument("bad padding");
  out.resize(len1 + len2);
  return out;
}

TruncatedHash truncated_sha256(std::span<const std::uint8_t> data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  static const unsigned char empty = 0;
  SHA256(data.empty() ? &empty : data.data(), data.size(), digest);
  TruncatedHash h;
  std::copy(digest, digest + kHashBytes, h.begin());
  return h;
}

}  // namespace mm::crypto
