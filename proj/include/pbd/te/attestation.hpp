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

#include <string>

#include "pbd/common/bytes.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/signature.hpp"

namespace pbd::te {

// Platform-signed statement that code with `measurement` is running and owns
// the per-execution session (X25519) and producer (Ed25519) keys. `nonce`
// is the verifier's challenge.
struct AttestationReport {
  std::string platform_id;
  Digest measurement{};
  Bytes session_public_key;
  Bytes producer_public_key;
  Bytes nonce;
  Bytes signature;

  Bytes signed_portion() const;
  Bytes serialize() const;  // "ATT1"
  // Throws Error(kMalformed).
  static AttestationReport parse(ByteView data);
  bool operator==(const AttestationReport&) const = default;
};

// Simulated root of trust: one signing key per platform, trusted by the
// regulator out of band.
class Platform {
 public:
  Platform(std::string id, Rng& rng);

  const std::string& id() const { return id_; }
  const Bytes& public_key() const { return key_.public_key; }

  // Signs over the measurement the platform computes itself from the loaded
  // manifest and code, never over a caller-supplied digest.
  AttestationReport attest(const Digest& loaded_measurement,
                           ByteView session_public_key,
                           ByteView producer_public_key, ByteView nonce) const;

 private:
  std::string id_;
  crypto::KeyPair key_;
};

bool verify_report(const AttestationReport& report,
                   ByteView platform_public_key);

}  // namespace pbd::te
