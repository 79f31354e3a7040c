// Copyright 2026 The pbd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "pbd/common/rng.hpp"

#include <algorithm>
#include <cstring>

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include "pbd/common/error.hpp"

namespace pbd {

struct Rng::Cipher {
  EVP_CIPHER_CTX* ctx = nullptr;
  ~Cipher() { EVP_CIPHER_CTX_free(ctx); }
};

namespace {

Digest sha256_of(ByteView a, ByteView b) {
  Digest out;
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  unsigned int len = 0;
  const bool ok = md != nullptr &&
                  EVP_DigestInit_ex(md, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(md, a.data(), a.size()) == 1 &&
                  EVP_DigestUpdate(md, b.data(), b.size()) == 1 &&
                  EVP_DigestFinal_ex(md, out.data(), &len) == 1;
  EVP_MD_CTX_free(md);
  if (!ok) throw Error(ErrorCode::kInternal, "sha256 failed");
  return out;
}

Digest seed_key(std::uint64_t seed) {
  Bytes s;
  append_u64_be(s, seed);
  return sha256_of(as_bytes("pbd-rng-seed"), s);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : Rng(seed_key(seed)) {}

Rng::Rng(const Digest& key) : key_(key), cipher_(std::make_unique<Cipher>()) {
  cipher_->ctx = EVP_CIPHER_CTX_new();
  // ChaCha20 IV is a 4-byte counter followed by a 12-byte nonce; both zero.
  const std::array<std::uint8_t, 16> iv{};
  if (cipher_->ctx == nullptr ||
      EVP_EncryptInit_ex(cipher_->ctx, EVP_chacha20(), nullptr, key_.data(),
                         iv.data()) != 1) {
    throw Error(ErrorCode::kInternal, "chacha20 init failed");
  }
}

Rng::~Rng() {
  OPENSSL_cleanse(key_.data(), key_.size());
  OPENSSL_cleanse(buffer_.data(), buffer_.size());
}

Rng::Rng(Rng&&) noexcept = default;
Rng& Rng::operator=(Rng&&) noexcept = default;

void Rng::refill() {
  std::array<std::uint8_t, 4096> zeros{};
  int outl = 0;
  if (EVP_EncryptUpdate(cipher_->ctx, buffer_.data(), &outl, zeros.data(),
                        static_cast<int>(zeros.size())) != 1 ||
      outl != static_cast<int>(buffer_.size())) {
    throw Error(ErrorCode::kInternal, "chacha20 keystream failed");
  }
  pos_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    const std::size_t n = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

Bytes Rng::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

Digest Rng::digest() {
  Digest d;
  fill(d);
  return d;
}

Rng Rng::fork(std::string_view label) const {
  return Rng(sha256_of(key_, as_bytes(label)));
}

Rng::result_type Rng::operator()() {
  std::array<std::uint8_t, 8> raw;
  fill(raw);
  return read_u64_be(raw);
}

}  // namespace pbd
