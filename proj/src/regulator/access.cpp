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
#include "pbd/regulator/access.hpp"

#include <array>
#include <utility>

#include "pbd/common/error.hpp"

namespace pbd::regulator {
namespace {

constexpr std::array<std::pair<DenyReason, std::string_view>, 7> kNames = {{
    {DenyReason::kTeUnknown, "TE_UNKNOWN"},
    {DenyReason::kStaleNonce, "STALE_NONCE"},
    {DenyReason::kRequesterUnauthenticated, "REQUESTER_UNAUTHENTICATED"},
    {DenyReason::kTypeUnauthenticated, "TYPE_UNAUTHENTICATED"},
    {DenyReason::kNoRule, "NO_RULE"},
    {DenyReason::kPredicateMissing, "PREDICATE_MISSING"},
    {DenyReason::kExpiredConsent, "EXPIRED_CONSENT"},
}};

crypto::SubjectTag subject_from(ByteView raw) {
  if (raw.empty()) return std::nullopt;
  if (raw.size() != 32) throw Error(ErrorCode::kMalformed, "subject size");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

}  // namespace

std::string_view to_string(DenyReason reason) {
  for (const auto& [r, name] : kNames) {
    if (r == reason) return name;
  }
  return "UNKNOWN";
}

DenyReason deny_reason_from_string(std::string_view name) {
  for (const auto& [r, n] : kNames) {
    if (n == name) return r;
  }
  throw Error(ErrorCode::kConfig, "unknown deny reason " + std::string(name));
}

Bytes AccessRequest::possession_message() const {
  return FrameWriter("POS1")
      .field(request_nonce)
      .field(attestation.measurement)
      .field(claimed_input_type.canonical())
      .field(crypto::subject_bytes(subject))
      .finish();
}

Bytes AccessRequest::serialize() const {
  FrameWriter w("ARQ1");
  w.field(attestation.serialize())
      .field(claimed_input_type.canonical())
      .field(crypto::subject_bytes(subject))
      .field(wrapped_key);
  if (requester) {
    w.field(requester->role)
        .field(requester->certificate.serialize())
        .field(requester->possession_signature)
        .field(requester->role_credential ? requester->role_credential->serialize()
                                          : Bytes{});
  } else {
    w.field(Bytes{}).field(Bytes{}).field(Bytes{}).field(Bytes{});
  }
  w.field(request_nonce);
  return w.finish();
}

AccessRequest AccessRequest::parse(ByteView data) {
  FrameReader r(data, "ARQ1");
  AccessRequest q;
  q.attestation = te::AttestationReport::parse(r.field());
  q.claimed_input_type = crypto::TypeId::parse(r.field_string());
  q.subject = subject_from(r.field());
  q.wrapped_key = r.field_bytes();
  std::string role = r.field_string();
  const ByteView cert = r.field();
  Bytes possession = r.field_bytes();
  const ByteView cred = r.field();
  if (!role.empty() || !cert.empty()) {
    RequesterProof p;
    p.role = std::move(role);
    p.certificate = identity::VidKeyCertificate::parse(cert);
    p.possession_signature = std::move(possession);
    if (!cred.empty()) p.role_credential = identity::Credential::parse(cred);
    q.requester = std::move(p);
  }
  q.request_nonce = r.field_bytes();
  r.expect_end();
  return q;
}

Bytes grant_aad(std::string_view decision_id, const crypto::TypeId& type,
                const crypto::SubjectTag& subject) {
  return FrameWriter("GRK1")
      .field(decision_id)
      .field(type.canonical())
      .field(crypto::subject_bytes(subject))
      .finish();
}

}  // namespace pbd::regulator
