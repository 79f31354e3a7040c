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
#pragma once

#include <memory>

#include "pbd/common/bytes.hpp"
#include "pbd/common/rng.hpp"

namespace pbd::crypto {

// Chaum-style blind signatures over RSA with a full-domain hash.
//
//   blind:        b = H(m) * r^e  mod n        (r uniform in Z_n^*)
//   sign_blinded: s' = b^d        mod n
//   unblind:      s = s' * r^-1   mod n  ==  H(m)^d
//
// Because r^e is a uniform unit, b is uniform and independent of m; the
// signer's view is b alone.

class RsaPublicKey {
 public:
  RsaPublicKey();
  ~RsaPublicKey();
  RsaPublicKey(const RsaPublicKey&);
  RsaPublicKey& operator=(const RsaPublicKey&);
  RsaPublicKey(RsaPublicKey&&) noexcept;
  RsaPublicKey& operator=(RsaPublicKey&&) noexcept;

  // Framed "RPK1": modulus, exponent (big-endian).
  Bytes serialize() const;
  // Throws Error(kMalformedKey).
  static RsaPublicKey parse(ByteView data);

  std::size_t modulus_bytes() const;
  Digest fingerprint() const;
  bool operator==(const RsaPublicKey& other) const;

  struct Impl;
  const Impl& impl() const { return *impl_; }
  Impl& impl() { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

class RsaPrivateKey {
 public:
  ~RsaPrivateKey();
  RsaPrivateKey(RsaPrivateKey&&) noexcept;
  RsaPrivateKey& operator=(RsaPrivateKey&&) noexcept;
  RsaPrivateKey(const RsaPrivateKey&) = delete;
  RsaPrivateKey& operator=(const RsaPrivateKey&) = delete;

  // Primes are drawn from `rng`, so keys are reproducible from a seed.
  static RsaPrivateKey generate(Rng& rng, int bits = 2048);

  const RsaPublicKey& public_key() const { return public_; }

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  RsaPrivateKey();
  RsaPublicKey public_;
  std::unique_ptr<Impl> impl_;
};

struct BlindedMessage {
  Bytes value;            // sent to the signer
  Bytes blinding_factor;  // kept by the message author
};

// H(m) in [0, n), fixed width (modulus_bytes).
Bytes full_domain_hash(const RsaPublicKey& pk, ByteView message);

BlindedMessage blind(ByteView message, const RsaPublicKey& signer_public_key,
                     Rng& rng);
// Throws Error(kInvalidArgument) if the value is not in [0, n).
Bytes sign_blinded(const RsaPrivateKey& signer_private_key,
                   ByteView blinded_value);
Bytes unblind(ByteView blinded_signature, ByteView blinding_factor,
              const RsaPublicKey& signer_public_key);

Bytes rsa_fdh_sign(const RsaPrivateKey& key, ByteView message);
bool rsa_fdh_verify(const RsaPublicKey& key, ByteView message,
                    ByteView signature);

}  // namespace pbd::crypto
