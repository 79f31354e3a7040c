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
#include "pbd/regulator/predicates.hpp"

#include <algorithm>

namespace pbd::regulator {

Bytes ConsentPredicate::signed_portion() const {
  FrameWriter w("CNS1");
  w.field(subject.vid).field(verb).field(object);
  w.field_u64(scope.size());
  for (const auto& p : scope) w.field(p.canonical());
  w.field_i64(expiry).field(nonce);
  return w.finish();
}

bool ConsentPredicate::covers(const crypto::TypeId& type) const {
  return std::any_of(scope.begin(), scope.end(),
                     [&](const auto& p) { return p.matches(type); });
}

ConsentPredicate sign_consent(const identity::VidKeyCertificate& subject,
                              const crypto::KeyPair& vid_key,
                              std::string_view verb, std::string_view object,
                              std::vector<crypto::TypePattern> scope,
                              Timestamp expiry, Rng& rng) {
  ConsentPredicate c{subject,       std::string(verb), std::string(object),
                     std::move(scope), expiry,          rng.bytes(16),
                     {}};
  c.signature = crypto::sign(vid_key.private_key, c.signed_portion());
  return c;
}

Bytes ConsentRevocation::signed_portion() const {
  return FrameWriter("RVK1")
      .field(subject.vid)
      .field(consent_nonce)
      .field_i64(issued_at)
      .finish();
}

ConsentRevocation sign_revocation(const identity::VidKeyCertificate& subject,
                                  const crypto::KeyPair& vid_key,
                                  ByteView consent_nonce, Timestamp issued_at) {
  ConsentRevocation r{subject, to_bytes(consent_nonce), issued_at, {}};
  r.signature = crypto::sign(vid_key.private_key, r.signed_portion());
  return r;
}

std::string_view to_string(ConsentOutcome outcome) {
  switch (outcome) {
    case ConsentOutcome::kStored: return "STORED";
    case ConsentOutcome::kBadSignature: return "BAD_SIGNATURE";
    case ConsentOutcome::kExpired: return "EXPIRED";
    case ConsentOutcome::kReplay: return "REPLAY";
    case ConsentOutcome::kUnauthenticatedSubject: return "UNAUTHENTICATED_SUBJECT";
    case ConsentOutcome::kUnknownConsent: return "UNKNOWN_CONSENT";
  }
  return "UNKNOWN";
}

std::string_view to_string(ApprovalOutcome outcome) {
  return outcome == ApprovalOutcome::kStored ? "STORED" : "BAD_SIGNATURE";
}

void PredicateStore::add_consent(ConsentPredicate predicate, Timestamp now) {
  nonces_.insert(predicate.nonce);
  consents_.push_back(
      StoredConsent{std::move(predicate), now, ++version_, std::nullopt});
}

bool PredicateStore::nonce_used(ByteView nonce) const {
  return nonces_.contains(to_bytes(nonce));
}

bool PredicateStore::revoke(const Digest& subject_vid, ByteView nonce) {
  for (StoredConsent& s : consents_) {
    if (s.predicate.subject.vid == subject_vid &&
        std::equal(s.predicate.nonce.begin(), s.predicate.nonce.end(),
                   nonce.begin(), nonce.end())) {
      if (!s.revoked_version) s.revoked_version = ++version_;
      return true;
    }
  }
  return false;
}

void PredicateStore::add_approval(const std::string& approver,
                                  const Digest& subject_vid,
                                  const std::string& attribute) {
  approvals_.emplace(std::make_tuple(approver, vid_object(subject_vid), attribute),
                     ++version_);
}

ConsentStatus PredicateStore::consent_status(std::string_view subject_hex,
                                             std::string_view verb,
                                             std::string_view object,
                                             const crypto::TypeId& type,
                                             Timestamp t,
                                             std::uint64_t version) const {
  bool saw_expired = false;
  for (const StoredConsent& s : consents_) {
    const ConsentPredicate& p = s.predicate;
    if (s.recorded_version > version) continue;
    if (s.revoked_version && *s.revoked_version <= version) continue;
    if (vid_object(p.subject.vid) != subject_hex || p.verb != verb ||
        p.object != object || !p.covers(type)) {
      continue;
    }
    if (t < p.expiry) return ConsentStatus::kValid;
    saw_expired = true;
  }
  return saw_expired ? ConsentStatus::kExpired : ConsentStatus::kMissing;
}

bool PredicateStore::approval_holds(std::string_view approver,
                                    std::string_view subject_hex,
                                    std::string_view attribute,
                                    std::uint64_t version) const {
  auto it = approvals_.find(std::make_tuple(std::string(approver),
                                            std::string(subject_hex),
                                            std::string(attribute)));
  return it != approvals_.end() && it->second <= version;
}

}  // namespace pbd::regulator
