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

#include <optional>

#include "pbd/common/bytes.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/signature.hpp"
#include "pbd/crypto/type_id.hpp"

namespace pbd::crypto {

// Subject virtual identity of an envelope, or nullopt for "none".
using SubjectTag = std::optional<Digest>;
using DataKey = AeadKey;

Bytes subject_bytes(const SubjectTag& subject);

// Regulator-controlled, type-bound ciphertext.
//
// A fresh data key encrypts the payload with AES-256-GCM; the associated data
// is (type_id, subject, producer public key). The data key itself is boxed to
// the regulator's X25519 key with (type_id, subject) as associated data, so
// the regulator can only recover it for the type the requester claims.
//
// Wire format: "PBD1" then six length-prefixed fields (4-byte big-endian
// lengths): type_id, subject (0 or 32 bytes), wrapped_key, nonce, ciphertext,
// producer_sig. The signature covers the magic and the first five fields.
struct Envelope {
  TypeId type_id;
  SubjectTag subject;
  Bytes wrapped_key;
  AeadNonce nonce{};
  Bytes ciphertext;
  Bytes producer_sig;

  Bytes signed_portion() const;
  Bytes serialize() const;
  // Throws Error(kMalformed).
  static Envelope parse(ByteView data);

  bool operator==(const Envelope&) const = default;
};

// What the opening side believes the envelope to be. Opening succeeds only
// if all three match seal time.
struct OpenClaim {
  TypeId type_id;
  SubjectTag subject;
  Bytes producer_public_key;
};

Envelope seal(const TypeId& type_id, const SubjectTag& subject,
              ByteView payload, ByteView regulator_public_key,
              const KeyPair& producer, Rng& rng);

// Regulator side. nullopt when the claimed type or subject differs from seal
// time, or the key is not the regulator's.
std::optional<DataKey> unwrap_data_key(ByteView regulator_private_key,
                                       ByteView wrapped_key,
                                       const TypeId& claimed_type,
                                       const SubjectTag& claimed_subject);

// Verifies producer_sig under the claimed producer, then AEAD-opens with the
// claimed binding. Throws Error with code:
//   kSignatureInvalid  producer signature does not verify
//   kTypeMismatch      claimed type or subject differs from the envelope
//   kKeyMismatch       wrong data key
Bytes open(const Envelope& envelope, const DataKey& data_key,
           const OpenClaim& claim);

}  // namespace pbd::crypto
