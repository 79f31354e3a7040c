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
#include <memory>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>

#include "pbd/common/error.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/hash.hpp"
#include "pbd/crypto/signature.hpp"

namespace pbd::crypto {
namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

[[noreturn]] void fail(const char* what) {
  throw Error(ErrorCode::kInternal, what);
}

PkeyPtr raw_private(int type, ByteView key) {
  if (key.size() != 32) {
    throw Error(ErrorCode::kMalformedKey, "expected 32-byte private key");
  }
  PkeyPtr p(EVP_PKEY_new_raw_private_key(type, nullptr, key.data(), key.size()));
  if (!p) throw Error(ErrorCode::kMalformedKey, "unusable private key");
  return p;
}

PkeyPtr raw_public(int type, ByteView key) {
  if (key.size() != 32) {
    throw Error(ErrorCode::kMalformedKey, "expected 32-byte public key");
  }
  PkeyPtr p(EVP_PKEY_new_raw_public_key(type, nullptr, key.data(), key.size()));
  if (!p) throw Error(ErrorCode::kMalformedKey, "unusable public key");
  return p;
}

Bytes public_of(const EVP_PKEY* p) {
  Bytes out(32);
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(p, out.data(), &len) != 1 || len != 32) {
    fail("raw public key export failed");
  }
  return out;
}

Bytes x25519_shared(ByteView private_key, ByteView peer_public) {
  PkeyPtr priv = raw_private(EVP_PKEY_X25519, private_key);
  PkeyPtr peer = raw_public(EVP_PKEY_X25519, peer_public);
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(priv.get(), nullptr));
  Bytes shared(32);
  std::size_t len = shared.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 || len != 32) {
    // Low-order peer points fail here; treat as an authentication failure.
    return {};
  }
  return shared;
}

AeadKey box_key(ByteView shared, ByteView eph_pub, ByteView recipient_pub) {
  Bytes info = to_bytes("pbd-box-v1");
  append(info, eph_pub);
  append(info, recipient_pub);
  const Bytes okm = hkdf(shared, {}, info, kAeadKeySize);
  AeadKey key;
  std::copy(okm.begin(), okm.end(), key.begin());
  return key;
}

}  // namespace

Digest hash(ByteView message) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(message.data(), message.size(), out.data(), &len,
                 EVP_sha256(), nullptr) != 1) {
    fail("sha256 failed");
  }
  return out;
}

Digest prf(ByteView key, ByteView message) {
  Digest out;
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
           message.data(), message.size(), out.data(), &len) == nullptr) {
    fail("hmac failed");
  }
  return out;
}

Bytes hkdf(ByteView ikm, ByteView salt, ByteView info, std::size_t length) {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  Bytes out(length);
  std::size_t out_len = length;
  // OpenSSL rejects a null salt pointer even with zero length.
  static const std::uint8_t kEmpty[1] = {0};
  const std::uint8_t* salt_ptr = salt.empty() ? kEmpty : salt.data();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt_ptr,
                                  static_cast<int>(salt.size())) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(),
                                 static_cast<int>(ikm.size())) != 1 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), info.data(),
                                  static_cast<int>(info.size())) != 1 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &out_len) != 1) {
    fail("hkdf failed");
  }
  return out;
}

KeyPair generate_signing_keypair(Rng& rng) {
  Bytes seed = rng.bytes(kSigningPrivateKeySize);
  KeyPair kp = signing_keypair_from_seed(seed);
  OPENSSL_cleanse(seed.data(), seed.size());
  return kp;
}

KeyPair signing_keypair_from_seed(ByteView seed) {
  PkeyPtr p = raw_private(EVP_PKEY_ED25519, seed);
  return KeyPair{public_of(p.get()), Bytes(seed.begin(), seed.end())};
}

Bytes sign(ByteView private_key, ByteView message) {
  PkeyPtr p = raw_private(EVP_PKEY_ED25519, private_key);
  MdCtxPtr md(EVP_MD_CTX_new());
  Bytes sig(kSignatureSize);
  std::size_t len = sig.size();
  if (!md ||
      EVP_DigestSignInit(md.get(), nullptr, nullptr, nullptr, p.get()) != 1 ||
      EVP_DigestSign(md.get(), sig.data(), &len, message.data(),
                     message.size()) != 1 ||
      len != kSignatureSize) {
    fail("ed25519 sign failed");
  }
  return sig;
}

bool verify(ByteView public_key, ByteView message, ByteView signature) {
  PkeyPtr p = raw_public(EVP_PKEY_ED25519, public_key);
  if (signature.size() != kSignatureSize) return false;
  MdCtxPtr md(EVP_MD_CTX_new());
  if (!md ||
      EVP_DigestVerifyInit(md.get(), nullptr, nullptr, nullptr, p.get()) != 1) {
    fail("ed25519 verify init failed");
  }
  return EVP_DigestVerify(md.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

Bytes aead_seal(const AeadKey& key, const AeadNonce& nonce, ByteView plaintext,
                ByteView associated_data) {
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  Bytes out(plaintext.size() + kAeadTagSize);
  int len = 0;
  int total = 0;
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                         nonce.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, associated_data.data(),
                        static_cast<int>(associated_data.size())) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    fail("aes-gcm encrypt failed");
  }
  total = len;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                          out.data() + plaintext.size()) != 1) {
    fail("aes-gcm finalize failed");
  }
  return out;
}

std::optional<Bytes> aead_open(const AeadKey& key, const AeadNonce& nonce,
                               ByteView sealed, ByteView associated_data) {
  if (sealed.size() < kAeadTagSize) return std::nullopt;
  const std::size_t ct_len = sealed.size() - kAeadTagSize;
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  Bytes out(ct_len);
  int len = 0;
  if (!ctx ||
      EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                         nonce.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, associated_data.data(),
                        static_cast<int>(associated_data.size())) != 1 ||
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(),
                        static_cast<int>(ct_len)) != 1) {
    fail("aes-gcm decrypt failed");
  }
  Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(ct_len), sealed.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagSize,
                          tag.data()) != 1) {
    fail("aes-gcm set tag failed");
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &final_len) != 1) {
    OPENSSL_cleanse(out.data(), out.size());
    return std::nullopt;
  }
  return out;
}

BoxKeyPair generate_box_keypair(Rng& rng) {
  Bytes seed = rng.bytes(32);
  PkeyPtr p = raw_private(EVP_PKEY_X25519, seed);
  return BoxKeyPair{public_of(p.get()), std::move(seed)};
}

Bytes box_seal(ByteView recipient_public_key, ByteView plaintext,
               ByteView associated_data, Rng& rng) {
  // Validate the recipient key before touching the rng.
  raw_public(EVP_PKEY_X25519, recipient_public_key);
  BoxKeyPair eph = generate_box_keypair(rng);
  Bytes shared = x25519_shared(eph.private_key, recipient_public_key);
  if (shared.empty()) {
    throw Error(ErrorCode::kMalformedKey, "degenerate recipient key");
  }
  AeadKey key = box_key(shared, eph.public_key, recipient_public_key);
  AeadNonce nonce;
  rng.fill(nonce);
  Bytes out = eph.public_key;
  append(out, nonce);
  append(out, aead_seal(key, nonce, plaintext, associated_data));
  OPENSSL_cleanse(shared.data(), shared.size());
  OPENSSL_cleanse(key.data(), key.size());
  OPENSSL_cleanse(eph.private_key.data(), eph.private_key.size());
  return out;
}

std::optional<Bytes> box_open(ByteView recipient_private_key, ByteView boxed,
                              ByteView associated_data) {
  if (recipient_private_key.size() != 32) {
    throw Error(ErrorCode::kMalformedKey, "expected 32-byte private key");
  }
  if (boxed.size() < 32 + kAeadNonceSize + kAeadTagSize) return std::nullopt;
  const ByteView eph_pub = boxed.subspan(0, 32);
  AeadNonce nonce;
  std::copy_n(boxed.begin() + 32, kAeadNonceSize, nonce.begin());
  Bytes shared = x25519_shared(recipient_private_key, eph_pub);
  if (shared.empty()) return std::nullopt;
  PkeyPtr priv = raw_private(EVP_PKEY_X25519, recipient_private_key);
  const Bytes recipient_pub = public_of(priv.get());
  AeadKey key = box_key(shared, eph_pub, recipient_pub);
  auto out = aead_open(key, nonce, boxed.subspan(32 + kAeadNonceSize),
                       associated_data);
  OPENSSL_cleanse(shared.data(), shared.size());
  OPENSSL_cleanse(key.data(), key.size());
  return out;
}

}  // namespace pbd::crypto
