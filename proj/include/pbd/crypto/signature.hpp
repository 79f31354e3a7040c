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

#include "pbd/common/bytes.hpp"
#include "pbd/common/rng.hpp"

namespace pbd::crypto {

inline constexpr std::size_t kSigningPublicKeySize = 32;
inline constexpr std::size_t kSigningPrivateKeySize = 32;
inline constexpr std::size_t kSignatureSize = 64;

// Ed25519. Signing is deterministic, so a run's transcript depends only on
// the seed that produced the keys.
struct KeyPair {
  Bytes public_key;
  Bytes private_key;
};

KeyPair generate_signing_keypair(Rng& rng);
// `seed` must be 32 bytes.
KeyPair signing_keypair_from_seed(ByteView seed);

// Throws Error(kMalformedKey) if the key is not a 32-byte Ed25519 seed.
Bytes sign(ByteView private_key, ByteView message);

// Returns false for a bad signature; throws Error(kMalformedKey) for a key
// that is not 32 bytes, so callers can tell "invalid" from "unusable".
bool verify(ByteView public_key, ByteView message, ByteView signature);

}  // namespace pbd::crypto
