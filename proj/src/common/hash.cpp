// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/common/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace vizforge {
namespace {

std::string to_hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(kHex[bytes[i] >> 4]);
    out.push_back(kHex[bytes[i] & 0x0F]);
  }
  return out;
}

std::array<unsigned char, 32> digest(const void* data, std::size_t n) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data, n, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  const auto d = digest(data.data(), data.size());
  return to_hex(d.data(), d.size());
}

std::string sha256_hex(std::span<const std::byte> data) {
  const auto d = digest(data.data(), data.size());
  return to_hex(d.data(), d.size());
}

std::uint64_t sha256_u64(std::string_view data) {
  const auto d = digest(data.data(), data.size());
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
  return v;
}

bool is_sha256_hex(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: init failed");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

void Sha256::update(std::string_view data) {
  if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1) {
    throw std::runtime_error("sha256: update failed");
  }
}

std::string Sha256::hex_digest() {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, out.data(), &len) != 1) {
    throw std::runtime_error("sha256: final failed");
  }
  return to_hex(out.data(), len);
}

}  // namespace vizforge
