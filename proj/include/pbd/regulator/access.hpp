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
#include <string>
#include <string_view>

#include "pbd/common/bytes.hpp"
#include "pbd/crypto/envelope.hpp"
#include "pbd/crypto/type_id.hpp"
#include "pbd/identity/credential.hpp"
#include "pbd/identity/identity.hpp"
#include "pbd/te/attestation.hpp"

namespace pbd::regulator {

enum class DenyReason {
  kTeUnknown,
  kStaleNonce,
  kRequesterUnauthenticated,
  kTypeUnauthenticated,
  kNoRule,
  kPredicateMissing,
  kExpiredConsent,
};

std::string_view to_string(DenyReason reason);
// Throws Error(kConfig) for unknown names.
DenyReason deny_reason_from_string(std::string_view name);

// Identifies the human at a sink: a vid certified by the identity authority,
// proof of possession of its key over this request, and optionally a role
// credential presented in-band.
struct RequesterProof {
  std::string role;
  identity::VidKeyCertificate certificate;
  Bytes possession_signature;
  std::optional<identity::Credential> role_credential;
};

// Wire format: "ARQ1" then length-prefixed fields: attestation (ATT1 bytes),
// claimed_input_type, subject (0 or 32 bytes), wrapped_key, requester role,
// requester certificate (VKC1 bytes), possession signature, role credential
// (CRD1 bytes), request_nonce. Absent requester fields are empty.
struct AccessRequest {
  te::AttestationReport attestation;
  crypto::TypeId claimed_input_type{"-"};
  crypto::SubjectTag subject;
  Bytes wrapped_key;
  std::optional<RequesterProof> requester;
  Bytes request_nonce;

  // What the requester signs to prove possession of its vid key.
  Bytes possession_message() const;
  Bytes serialize() const;
  // Throws Error(kMalformed).
  static AccessRequest parse(ByteView data);
};

struct AccessDecision {
  bool granted = false;
  DenyReason reason = DenyReason::kNoRule;  // meaningful only when denied
  std::string decision_id;
  std::string rule_id;
  // Data key boxed to the attested session key; empty unless granted.
  Bytes wrapped_key;
};

// Associated data binding a released key to its decision.
Bytes grant_aad(std::string_view decision_id, const crypto::TypeId& type,
                const crypto::SubjectTag& subject);

}  // namespace pbd::regulator
