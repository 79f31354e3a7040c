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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/clock.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/signature.hpp"
#include "pbd/crypto/type_id.hpp"
#include "pbd/identity/credential.hpp"
#include "pbd/identity/identity.hpp"

namespace pbd::regulator {

// Rule arguments refer to vids by lowercase hex.
inline std::string vid_object(const Digest& vid) { return hex(vid); }

// subject(verb, object) over `scope`, valid while now < expiry. Signed by
// the subject's vid key, which the identity authority certifies.
struct ConsentPredicate {
  identity::VidKeyCertificate subject;
  std::string verb;
  std::string object;
  std::vector<crypto::TypePattern> scope;
  Timestamp expiry = 0;
  Bytes nonce;
  Bytes signature;

  Bytes signed_portion() const;
  bool covers(const crypto::TypeId& type) const;
};

ConsentPredicate sign_consent(const identity::VidKeyCertificate& subject,
                              const crypto::KeyPair& vid_key,
                              std::string_view verb, std::string_view object,
                              std::vector<crypto::TypePattern> scope,
                              Timestamp expiry, Rng& rng);

// Withdraws the consent with `consent_nonce`, effective at `issued_at`.
struct ConsentRevocation {
  identity::VidKeyCertificate subject;
  Bytes consent_nonce;
  Timestamp issued_at = 0;
  Bytes signature;

  Bytes signed_portion() const;
};

ConsentRevocation sign_revocation(const identity::VidKeyCertificate& subject,
                                  const crypto::KeyPair& vid_key,
                                  ByteView consent_nonce, Timestamp issued_at);

enum class ConsentOutcome {
  kStored,
  kBadSignature,
  kExpired,
  kReplay,
  kUnauthenticatedSubject,  // authority does not vouch for the vid key
  kUnknownConsent,          // revocation names no stored consent
};
std::string_view to_string(ConsentOutcome outcome);

enum class ApprovalVia { kDirect, kBlindCredential };

// approval(approver, subject_vid, attribute). Both forms carry a Credential:
// direct ones come straight from the approver, blind ones were unblinded by
// the subject.
struct ApprovalPredicate {
  identity::Credential credential;
  ApprovalVia obtained_via = ApprovalVia::kDirect;
};

enum class ApprovalOutcome { kStored, kBadSignature };
std::string_view to_string(ApprovalOutcome outcome);

enum class ConsentStatus { kValid, kExpired, kMissing };

struct StoredConsent {
  ConsentPredicate predicate;
  Timestamp recorded_at = 0;
  std::uint64_t recorded_version = 0;
  std::optional<std::uint64_t> revoked_version;
};

// Facts are never deleted. Every mutation bumps version(); queries take the
// wall time `t` (for expiry) and a version (for which facts existed), so any
// past decision can be re-evaluated exactly.
class PredicateStore {
 public:
  // Caller has verified the predicate.
  void add_consent(ConsentPredicate predicate, Timestamp now);
  bool nonce_used(ByteView nonce) const;
  // False if no consent with that nonce belongs to `subject_vid`.
  bool revoke(const Digest& subject_vid, ByteView nonce);
  void add_approval(const std::string& approver, const Digest& subject_vid,
                    const std::string& attribute);

  std::uint64_t version() const { return version_; }

  // Status of consent(subject, verb, object) for `type`. kExpired only if
  // some matching consent existed and all have expired by `t`.
  ConsentStatus consent_status(std::string_view subject_hex,
                               std::string_view verb, std::string_view object,
                               const crypto::TypeId& type, Timestamp t,
                               std::uint64_t version) const;
  bool approval_holds(std::string_view approver, std::string_view subject_hex,
                      std::string_view attribute, std::uint64_t version) const;

  std::size_t consent_count() const { return consents_.size(); }

 private:
  std::uint64_t version_ = 0;
  std::vector<StoredConsent> consents_;
  std::set<Bytes> nonces_;
  // (approver, subject hex, attribute) -> version recorded
  std::map<std::tuple<std::string, std::string, std::string>, std::uint64_t>
      approvals_;
};

}  // namespace pbd::regulator
