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
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/clock.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/blind_rsa.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/signature.hpp"
#include "pbd/identity/identity.hpp"
#include "pbd/regulator/access.hpp"
#include "pbd/regulator/audit_log.hpp"
#include "pbd/regulator/predicates.hpp"
#include "pbd/regulator/rules.hpp"
#include "pbd/te/attestation.hpp"
#include "pbd/te/endpoint.hpp"
#include "pbd/te/manifest.hpp"

namespace pbd::regulator {

struct RegistryEntry {
  Digest measurement{};
  te::Manifest manifest;
  std::string risk_annotation;
  // Rules refer to approved TEs by manifest name or by measurement.
  std::string approved_rules_hook;
};

// Ordered trace of authorisation milestones; one sequence across all
// requests.
enum class TraceKind {
  kConsentRecorded,
  kApprovalRecorded,
  kTeApproved,
  kTeAttested,
  kRequesterAuthenticated,
  kTypeAuthenticated,
  kRuleInstantiated,
  kKeyProvisioned,
  kDenied,
};
std::string_view to_string(TraceKind kind);

struct TraceEvent {
  std::uint64_t seq = 0;
  TraceKind kind = TraceKind::kDenied;
  std::string ref;  // decision id, rule id or reason
};

struct DecisionRecord {
  std::string decision_id;
  Timestamp at = 0;
  bool granted = false;
  DenyReason reason = DenyReason::kNoRule;
  std::string rule_id;
  std::uint64_t facts_version = 0;
  Bindings bindings;
  std::vector<PredicateTemplate> instantiated;
  crypto::TypeId type{"-"};
};

// Master key holder for the regulator itself. The key is released only to
// code whose attested measurement is in the bootstrap registry.
class KeyCustodian {
 public:
  explicit KeyCustodian(Rng rng);

  const Bytes& master_public_key() const { return master_.public_key; }
  void trust_platform(const std::string& id, Bytes platform_public_key);
  void approve_regulator_code(const Digest& measurement);
  Bytes issue_nonce();
  // Master private key boxed to the report's session key, or nullopt.
  std::optional<Bytes> provision(const te::AttestationReport& report);

 private:
  std::mutex mu_;
  Rng rng_;
  crypto::BoxKeyPair master_;
  std::map<std::string, Bytes> platforms_;
  std::set<Digest> approved_;
  std::set<Bytes> nonces_;
};

// Manifest of the regulator's own code when it runs as a TE.
te::Manifest regulator_manifest();

class Regulator : public te::RegulatorEndpoint {
 public:
  // `master` is the E_R key pair envelopes are sealed to.
  Regulator(std::string name, Rng rng, const Clock& clock,
            const identity::IdentityAuthority& authority,
            crypto::BoxKeyPair master);
  // Generates a fresh master key.
  Regulator(std::string name, Rng rng, const Clock& clock,
            const identity::IdentityAuthority& authority);

  // Runs the regulator's own code under attestation and obtains the master
  // key from the custodian. Throws Error(kAccessDenied) if refused.
  static std::unique_ptr<Regulator> bootstrap(
      std::string name, Rng rng, const Clock& clock,
      const identity::IdentityAuthority& authority, KeyCustodian& custodian,
      const te::Platform& platform, ByteView regulator_code);

  Regulator(const Regulator&) = delete;
  Regulator& operator=(const Regulator&) = delete;

  const std::string& name() const { return name_; }
  const Bytes& public_key() const { return master_.public_key; }
  const Bytes& sealing_key() const override { return master_.public_key; }
  const Bytes& signing_public_key() const { return signing_.public_key; }

  void trust_platform(const std::string& id, Bytes platform_public_key);
  void trust_approver(const std::string& approver, const std::string& attribute,
                      crypto::RsaPublicKey key);
  void load_rules(RuleSet rules);
  RuleSet rules() const;

  // Throws Error(kStructuralReject) naming the failed check: callback,
  // outputs, minimisation, annotation.
  RegistryEntry approve_te(const te::Manifest& manifest, ByteView code_image,
                           std::string_view risk_annotation);
  std::optional<RegistryEntry> registry_lookup(const Digest& measurement) const;

  ConsentOutcome record_consent(const ConsentPredicate& predicate);
  ConsentOutcome revoke_consent(const ConsentRevocation& revocation);
  ApprovalOutcome record_approval(const ApprovalPredicate& predicate);

  Bytes issue_nonce() override;
  AccessDecision authorize(const AccessRequest& request);
  // Throws Error(kMalformed) for unparseable bytes.
  AccessDecision handle(ByteView access_request) override;

  // Grants iff the purpose is listed in the rule file. Audited either way.
  std::optional<identity::LinkGrant> authorize_link(
      const identity::LinkRequest& request);

  // Re-evaluates a past GRANT against the facts as they stood then.
  bool replay_decision(const std::string& decision_id) const;

  std::size_t key_releases() const;
  std::vector<DecisionRecord> decisions() const;
  std::vector<TraceEvent> trace() const;
  AuditLog& audit() { return audit_; }
  const AuditLog& audit() const { return audit_; }

 private:
  void trace_locked(TraceKind kind, std::string ref);
  AccessDecision finish_locked(DecisionRecord record, const Bytes& wire,
                               Bytes wrapped_key);
  bool predicates_hold_locked(const DecisionRecord& record, Timestamp t,
                              DenyReason* reason) const;

  std::string name_;
  const Clock& clock_;
  const identity::IdentityAuthority& authority_;
  mutable std::mutex mu_;
  Rng rng_;
  crypto::BoxKeyPair master_;
  crypto::KeyPair signing_;
  AuditLog audit_;

  std::map<std::string, Bytes> platforms_;
  std::map<std::pair<std::string, std::string>, crypto::RsaPublicKey> approvers_;
  std::map<Digest, RegistryEntry> registry_;
  RuleSet rules_;
  PredicateStore facts_;
  std::set<Bytes> outstanding_nonces_;
  std::vector<DecisionRecord> decisions_;
  std::vector<TraceEvent> trace_;
  std::uint64_t next_decision_ = 0;
  std::uint64_t next_link_ = 0;
  std::size_t key_releases_ = 0;
};

}  // namespace pbd::regulator
