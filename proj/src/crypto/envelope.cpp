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
#include "pbd/crypto/envelope.hpp"

#include <openssl/crypto.h>

#include "pbd/common/error.hpp"

namespace pbd::crypto {
namespace {

constexpr std::string_view kMagic = "PBD1";

Bytes payload_aad(const TypeId& type, const SubjectTag& subject,
                  ByteView producer) {
  return FrameWriter("AAD1")
      .field(type.canonical())
      .field(subject_bytes(subject))
      .field(producer)
      .finish();
}

Bytes wrap_aad(const TypeId& type, const SubjectTag& subject) {
  return FrameWriter("WRP1")
      .field(type.canonical())
      .field(subject_bytes(subject))
      .finish();
}

FrameWriter unsigned_frame(const Envelope& e) {
  FrameWriter w(kMagic);
  w.field(e.type_id.canonical())
      .field(subject_bytes(e.subject))
      .field(e.wrapped_key)
      .field(e.nonce)
      .field(e.ciphertext);
  return w;
}

}  // namespace

Bytes subject_bytes(const SubjectTag& subject) {
  if (!subject) return {};
  return Bytes(subject->begin(), subject->end());
}

Bytes Envelope::signed_portion() const { return unsigned_frame(*this).finish(); }

Bytes Envelope::serialize() const {
  FrameWriter w = unsigned_frame(*this);
  w.field(producer_sig);
  return w.finish();
}

Envelope Envelope::parse(ByteView data) {
  FrameReader r(data, kMagic);
  const std::string type_raw = r.field_string();
  TypeId type = TypeId::parse(type_raw);
  if (type.canonical() != type_raw) {
    throw Error(ErrorCode::kMalformed, "type_id not in canonical form");
  }
  const ByteView subject_raw = r.field();
  SubjectTag subject;
  if (subject_raw.size() == 32) {
    Digest d;
    std::copy(subject_raw.begin(), subject_raw.end(), d.begin());
    subject = d;
  } else if (!subject_raw.empty()) {
    throw Error(ErrorCode::kMalformed, "subject must be 0 or 32 bytes");
  }
  Bytes wrapped = r.field_bytes();
  const ByteView nonce_raw = r.field();
  if (nonce_raw.size() != kAeadNonceSize) {
    throw Error(ErrorCode::kMalformed, "nonce must be 12 bytes");
  }
  AeadNonce nonce;
  std::copy(nonce_raw.begin(), nonce_raw.end(), nonce.begin());
  Bytes ciphertext = r.field_bytes();
  Bytes sig = r.field_bytes();
  r.expect_end();
  return Envelope{std::move(type), subject,          std::move(wrapped),
                  nonce,           std::move(ciphertext), std::move(sig)};
}

Envelope seal(const TypeId& type_id, const SubjectTag& subject,
              ByteView payload, ByteView regulator_public_key,
              const KeyPair& producer, Rng& rng) {
  DataKey key;
  rng.fill(key);
  AeadNonce nonce;
  rng.fill(nonce);
  Envelope e{type_id, subject, {}, nonce, {}, {}};
  e.wrapped_key =
      box_seal(regulator_public_key, key, wrap_aad(type_id, subject), rng);
  e.ciphertext =
      aead_seal(key, nonce, payload,
                payload_aad(type_id, subject, producer.public_key));
  OPENSSL_cleanse(key.data(), key.size());
  e.producer_sig = sign(producer.private_key, e.signed_portion());
  return e;
}

std::optional<DataKey> unwrap_data_key(ByteView regulator_private_key,
                                       ByteView wrapped_key,
                                       const TypeId& claimed_type,
                                       const SubjectTag& claimed_subject) {
  auto raw = box_open(regulator_private_key, wrapped_key,
                      wrap_aad(claimed_type, claimed_subject));
  if (!raw || raw->size() != kAeadKeySize) return std::nullopt;
  DataKey key;
  std::copy(raw->begin(), raw->end(), key.begin());
  OPENSSL_cleanse(raw->data(), raw->size());
  return key;
}

Bytes open(const Envelope& envelope, const DataKey& data_key,
           const OpenClaim& claim) {
  if (!verify(claim.producer_public_key, envelope.signed_portion(),
              envelope.producer_sig)) {
    throw Error(ErrorCode::kSignatureInvalid, "producer signature");
  }
  auto plain = aead_open(
      data_key, envelope.nonce, envelope.ciphertext,
      payload_aad(claim.type_id, claim.subject, claim.producer_public_key));
  if (plain) return std::move(*plain);
  // The AEAD check already failed; the field comparison only picks the code.
  if (claim.type_id != envelope.type_id || claim.subject != envelope.subject) {
    throw Error(ErrorCode::kTypeMismatch,
                "claimed " + claim.type_id.canonical() + ", sealed " +
                    envelope.type_id.canonical());
  }
  throw Error(ErrorCode::kKeyMismatch, "data key does not open envelope");
}

}  // namespace pbd::crypto
