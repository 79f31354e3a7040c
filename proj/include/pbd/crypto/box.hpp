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

#include <array>
#include <optional>

#include "pbd/common/bytes.hpp"
#include "pbd/common/rng.hpp"

namespace pbd::crypto {

inline constexpr std::size_t kAeadKeySize = 32;
inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;

using AeadKey = std::array<std::uint8_t, kAeadKeySize>;
using AeadNonce = std::array<std::uint8_t, kAeadNonceSize>;

// AES-256-GCM. Output is ciphertext followed by the 16-byte tag.
Bytes aead_seal(const AeadKey& key, const AeadNonce& nonce, ByteView plaintext,
                ByteView associated_data);
std::optional<Bytes> aead_open(const AeadKey& key, const AeadNonce& nonce,
                               ByteView sealed, ByteView associated_data);

// X25519 keys for public-key encryption ("box").
struct BoxKeyPair {
  Bytes public_key;
  Bytes private_key;
};

BoxKeyPair generate_box_keypair(Rng& rng);

// Ephemeral-static X25519, HKDF-SHA256, AES-256-GCM.
// Layout: ephemeral public key (32) || nonce (12) || ciphertext || tag (16).
// Randomised: two seals of one plaintext differ.
Bytes box_seal(ByteView recipient_public_key, ByteView plaintext,
               ByteView associated_data, Rng& rng);
// nullopt on any authentication failure. Throws Error(kMalformedKey) for a
// private key of the wrong size.
std::optional<Bytes> box_open(ByteView recipient_private_key, ByteView boxed,
                              ByteView associated_data);

}  // namespace pbd::crypto
