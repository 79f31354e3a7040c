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
#include "pbd/crypto/blind_rsa.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>

#include "pbd/common/error.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::crypto {
namespace {

struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
struct BnCtxDeleter {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;

[[noreturn]] void fail(const char* what) {
  throw Error(ErrorCode::kInternal, what);
}

BnPtr new_bn() {
  BnPtr b(BN_new());
  if (!b) fail("BN_new");
  return b;
}

BnPtr bn_from(ByteView bytes) {
  BnPtr b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!b) fail("BN_bin2bn");
  return b;
}

BnPtr bn_dup(const BIGNUM* src) {
  BnPtr b(BN_dup(src));
  if (!b) fail("BN_dup");
  return b;
}

Bytes bn_to(const BIGNUM* b, std::size_t width) {
  Bytes out(width);
  if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0) {
    fail("BN_bn2binpad");
  }
  return out;
}

Bytes bn_to_min(const BIGNUM* b) {
  Bytes out(static_cast<std::size_t>(BN_num_bytes(b)));
  BN_bn2bin(b, out.data());
  return out;
}

BnCtxPtr new_ctx() {
  BnCtxPtr c(BN_CTX_new());
  if (!c) fail("BN_CTX_new");
  return c;
}

// Uniform in [0, bound) with negligible bias: draw 64 extra bits and reduce.
BnPtr random_below(const BIGNUM* bound, Rng& rng, BN_CTX* ctx) {
  Bytes raw = rng.bytes(static_cast<std::size_t>(BN_num_bytes(bound)) + 8);
  BnPtr wide = bn_from(raw);
  OPENSSL_cleanse(raw.data(), raw.size());
  BnPtr out = new_bn();
  if (BN_nnmod(out.get(), wide.get(), bound, ctx) != 1) fail("BN_nnmod");
  return out;
}

BnPtr generate_prime(Rng& rng, int bits, const BIGNUM* e, BN_CTX* ctx) {
  Bytes raw = rng.bytes(static_cast<std::size_t>(bits / 8));
  raw[0] |= 0xC0;  // top two bits so that p*q has the full bit length
  raw.back() |= 0x01;
  BnPtr candidate = bn_from(raw);
  OPENSSL_cleanse(raw.data(), raw.size());
  BnPtr pm1 = new_bn();
  BnPtr g = new_bn();
  while (true) {
    if (BN_sub(pm1.get(), candidate.get(), BN_value_one()) != 1 ||
        BN_gcd(g.get(), pm1.get(), e, ctx) != 1) {
      fail("prime search arithmetic");
    }
    if (BN_is_one(g.get())) {
      const int r = BN_check_prime(candidate.get(), ctx, nullptr);
      if (r < 0) fail("BN_check_prime");
      if (r == 1) return candidate;
    }
    if (BN_add_word(candidate.get(), 2) != 1) fail("BN_add_word");
  }
}

}  // namespace

struct RsaPublicKey::Impl {
  BnPtr n;
  BnPtr e;
  std::size_t width = 0;
};

struct RsaPrivateKey::Impl {
  BnPtr d;
  BnPtr p;
  BnPtr q;
  BnPtr dp;
  BnPtr dq;
  BnPtr qinv;
};

RsaPublicKey::RsaPublicKey() : impl_(std::make_unique<Impl>()) {}
RsaPublicKey::~RsaPublicKey() = default;
RsaPublicKey::RsaPublicKey(RsaPublicKey&&) noexcept = default;
RsaPublicKey& RsaPublicKey::operator=(RsaPublicKey&&) noexcept = default;

RsaPublicKey::RsaPublicKey(const RsaPublicKey& other)
    : impl_(std::make_unique<Impl>()) {
  if (other.impl_->n) {
    impl_->n = bn_dup(other.impl_->n.get());
    impl_->e = bn_dup(other.impl_->e.get());
    impl_->width = other.impl_->width;
  }
}

RsaPublicKey& RsaPublicKey::operator=(const RsaPublicKey& other) {
  if (this != &other) *this = RsaPublicKey(other);
  return *this;
}

Bytes RsaPublicKey::serialize() const {
  if (!impl_->n) throw Error(ErrorCode::kMalformedKey, "empty RSA key");
  return FrameWriter("RPK1")
      .field(bn_to_min(impl_->n.get()))
      .field(bn_to_min(impl_->e.get()))
      .finish();
}

RsaPublicKey RsaPublicKey::parse(ByteView data) {
  RsaPublicKey pk;
  try {
    FrameReader r(data, "RPK1");
    pk.impl_->n = bn_from(r.field());
    pk.impl_->e = bn_from(r.field());
    r.expect_end();
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedKey, e.detail());
  }
  if (BN_num_bits(pk.impl_->n.get()) < 512 || !BN_is_odd(pk.impl_->n.get()) ||
      BN_cmp(pk.impl_->e.get(), BN_value_one()) <= 0) {
    throw Error(ErrorCode::kMalformedKey, "implausible RSA parameters");
  }
  pk.impl_->width = static_cast<std::size_t>(BN_num_bytes(pk.impl_->n.get()));
  return pk;
}

std::size_t RsaPublicKey::modulus_bytes() const { return impl_->width; }

Digest RsaPublicKey::fingerprint() const { return hash(serialize()); }

bool RsaPublicKey::operator==(const RsaPublicKey& other) const {
  if (!impl_->n || !other.impl_->n) return !impl_->n && !other.impl_->n;
  return BN_cmp(impl_->n.get(), other.impl_->n.get()) == 0 &&
         BN_cmp(impl_->e.get(), other.impl_->e.get()) == 0;
}

RsaPrivateKey::RsaPrivateKey() : impl_(std::make_unique<Impl>()) {}
RsaPrivateKey::~RsaPrivateKey() = default;
RsaPrivateKey::RsaPrivateKey(RsaPrivateKey&&) noexcept = default;
RsaPrivateKey& RsaPrivateKey::operator=(RsaPrivateKey&&) noexcept = default;

RsaPrivateKey RsaPrivateKey::generate(Rng& rng, int bits) {
  if (bits < 512 || bits % 16 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "RSA size must be >=512, /16");
  }
  BnCtxPtr ctx = new_ctx();
  BnPtr e = new_bn();
  if (BN_set_word(e.get(), 65537) != 1) fail("BN_set_word");

  RsaPrivateKey key;
  Impl& k = *key.impl_;
  BnPtr n = new_bn();
  while (true) {
    k.p = generate_prime(rng, bits / 2, e.get(), ctx.get());
    k.q = generate_prime(rng, bits / 2, e.get(), ctx.get());
    if (BN_cmp(k.p.get(), k.q.get()) == 0) continue;
    if (BN_mul(n.get(), k.p.get(), k.q.get(), ctx.get()) != 1) fail("BN_mul");
    if (BN_num_bits(n.get()) == bits) break;
  }
  // Keep p > q so the CRT recombination below stays non-negative.
  if (BN_cmp(k.p.get(), k.q.get()) < 0) std::swap(k.p, k.q);

  BnPtr pm1 = new_bn();
  BnPtr qm1 = new_bn();
  BnPtr phi = new_bn();
  k.d = new_bn();
  k.dp = new_bn();
  k.dq = new_bn();
  k.qinv = new_bn();
  if (BN_sub(pm1.get(), k.p.get(), BN_value_one()) != 1 ||
      BN_sub(qm1.get(), k.q.get(), BN_value_one()) != 1 ||
      BN_mul(phi.get(), pm1.get(), qm1.get(), ctx.get()) != 1 ||
      BN_mod_inverse(k.d.get(), e.get(), phi.get(), ctx.get()) == nullptr ||
      BN_mod(k.dp.get(), k.d.get(), pm1.get(), ctx.get()) != 1 ||
      BN_mod(k.dq.get(), k.d.get(), qm1.get(), ctx.get()) != 1 ||
      BN_mod_inverse(k.qinv.get(), k.q.get(), k.p.get(), ctx.get()) ==
          nullptr) {
    fail("RSA key derivation");
  }
  key.public_.impl().n = std::move(n);
  key.public_.impl().e = std::move(e);
  key.public_.impl().width = static_cast<std::size_t>(bits / 8);
  return key;
}

namespace {

// x^d mod n via CRT.
BnPtr private_op(const RsaPrivateKey& key, const BIGNUM* x, BN_CTX* ctx) {
  const auto& k = key.impl();
  BnPtr m1 = new_bn();
  BnPtr m2 = new_bn();
  BnPtr h = new_bn();
  BnPtr out = new_bn();
  if (BN_mod_exp(m1.get(), x, k.dp.get(), k.p.get(), ctx) != 1 ||
      BN_mod_exp(m2.get(), x, k.dq.get(), k.q.get(), ctx) != 1 ||
      BN_mod_sub(h.get(), m1.get(), m2.get(), k.p.get(), ctx) != 1 ||
      BN_mod_mul(h.get(), h.get(), k.qinv.get(), k.p.get(), ctx) != 1 ||
      BN_mul(out.get(), h.get(), k.q.get(), ctx) != 1 ||
      BN_add(out.get(), out.get(), m2.get()) != 1) {
    fail("RSA private operation");
  }
  return out;
}

const RsaPublicKey::Impl& checked(const RsaPublicKey& pk) {
  if (!pk.impl().n) throw Error(ErrorCode::kMalformedKey, "empty RSA key");
  return pk.impl();
}

}  // namespace

Bytes full_domain_hash(const RsaPublicKey& pk, ByteView message) {
  const auto& k = checked(pk);
  // Expand with a counter-mode hash to 16 bytes beyond the modulus width so
  // the reduction mod n is statistically uniform.
  const Digest modulus_tag = pk.fingerprint();
  Bytes expanded;
  for (std::uint32_t counter = 0; expanded.size() < k.width + 16; ++counter) {
    Bytes block = to_bytes("pbd-fdh-v1");
    append(block, modulus_tag);
    append_u32_be(block, counter);
    append(block, message);
    append(expanded, hash(block));
  }
  expanded.resize(k.width + 16);
  BnCtxPtr ctx = new_ctx();
  BnPtr wide = bn_from(expanded);
  BnPtr out = new_bn();
  if (BN_nnmod(out.get(), wide.get(), k.n.get(), ctx.get()) != 1) {
    fail("BN_nnmod");
  }
  return bn_to(out.get(), k.width);
}

BlindedMessage blind(ByteView message, const RsaPublicKey& signer_public_key,
                     Rng& rng) {
  const auto& k = checked(signer_public_key);
  BnCtxPtr ctx = new_ctx();
  BnPtr h = bn_from(full_domain_hash(signer_public_key, message));
  BnPtr r;
  BnPtr g = new_bn();
  // A non-invertible r would reveal a factor of n; it is redrawn silently.
  while (true) {
    r = random_below(k.n.get(), rng, ctx.get());
    if (BN_is_zero(r.get())) continue;
    if (BN_gcd(g.get(), r.get(), k.n.get(), ctx.get()) != 1) fail("BN_gcd");
    if (BN_is_one(g.get())) break;
  }
  BnPtr re = new_bn();
  BnPtr b = new_bn();
  if (BN_mod_exp(re.get(), r.get(), k.e.get(), k.n.get(), ctx.get()) != 1 ||
      BN_mod_mul(b.get(), h.get(), re.get(), k.n.get(), ctx.get()) != 1) {
    fail("blinding");
  }
  return BlindedMessage{bn_to(b.get(), k.width), bn_to(r.get(), k.width)};
}

Bytes sign_blinded(const RsaPrivateKey& signer_private_key,
                   ByteView blinded_value) {
  const auto& k = checked(signer_private_key.public_key());
  BnPtr b = bn_from(blinded_value);
  if (BN_cmp(b.get(), k.n.get()) >= 0) {
    throw Error(ErrorCode::kInvalidArgument, "blinded value out of range");
  }
  BnCtxPtr ctx = new_ctx();
  return bn_to(private_op(signer_private_key, b.get(), ctx.get()).get(),
               k.width);
}

Bytes unblind(ByteView blinded_signature, ByteView blinding_factor,
              const RsaPublicKey& signer_public_key) {
  const auto& k = checked(signer_public_key);
  BnCtxPtr ctx = new_ctx();
  BnPtr s_blind = bn_from(blinded_signature);
  BnPtr r = bn_from(blinding_factor);
  BnPtr r_inv = new_bn();
  BnPtr s = new_bn();
  if (BN_mod_inverse(r_inv.get(), r.get(), k.n.get(), ctx.get()) == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "blinding factor not invertible");
  }
  if (BN_mod_mul(s.get(), s_blind.get(), r_inv.get(), k.n.get(), ctx.get()) !=
      1) {
    fail("unblinding");
  }
  return bn_to(s.get(), k.width);
}

Bytes rsa_fdh_sign(const RsaPrivateKey& key, ByteView message) {
  return sign_blinded(key, full_domain_hash(key.public_key(), message));
}

bool rsa_fdh_verify(const RsaPublicKey& key, ByteView message,
                    ByteView signature) {
  const auto& k = checked(key);
  if (signature.size() != k.width) return false;
  BnCtxPtr ctx = new_ctx();
  BnPtr s = bn_from(signature);
  if (BN_cmp(s.get(), k.n.get()) >= 0) return false;
  BnPtr m = new_bn();
  if (BN_mod_exp(m.get(), s.get(), k.e.get(), k.n.get(), ctx.get()) != 1) {
    fail("RSA public operation");
  }
  const Bytes expected = full_domain_hash(key, message);
  return constant_time_equal(bn_to(m.get(), k.width), expected);
}

}  // namespace pbd::crypto
