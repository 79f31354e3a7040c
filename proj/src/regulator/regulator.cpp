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
#include "pbd/regulator/regulator.hpp"

#include <algorithm>

#include "pbd/common/error.hpp"
#include "pbd/common/kv.hpp"
#include "pbd/crypto/envelope.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::regulator {
namespace {

constexpr std::string_view kMasterKeyAad = "RMK1";

[[noreturn]] void structural_reject(std::string_view check,
                                    std::string_view why) {
  throw Error(ErrorCode::kStructuralReject,
              std::string(check) + ": " + std::string(why));
}

void check_structure(const te::Manifest& m, std::string_view annotation) {
  if (!m.callback) structural_reject("callback", "regulator callback not declared");
  if (m.output_types.empty()) {
    structural_reject("outputs", "no typed output channel declared");
  }
  for (const auto& p : m.output_types) {
    if (p.name().find('*') != std::string::npos) {
      structural_reject("outputs", "output type " + p.canonical() +
                                       " is a wildcard");
    }
  }
  if (m.sink && !m.minimisation) {
    structural_reject("minimisation", "sink without minimisation policy");
  }
  if (m.minimisation && m.minimisation->allowed_fields.empty()) {
    structural_reject("minimisation", "policy allows no fields");
  }
  if (trim(annotation).empty()) {
    structural_reject("annotation", "risk annotation is empty");
  }
}

std::string short_hex(const Digest& d) { return hex(d).substr(0, 16); }

}  // namespace

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::kConsentRecorded: return "consent-recorded";
    case TraceKind::kApprovalRecorded: return "approval-recorded";
    case TraceKind::kTeApproved: return "te-approved";
    case TraceKind::kTeAttested: return "te-attested";
    case TraceKind::kRequesterAuthenticated: return "requester-authenticated";
    case TraceKind::kTypeAuthenticated: return "type-authenticated";
    case TraceKind::kRuleInstantiated: return "rule-instantiated";
    case TraceKind::kKeyProvisioned: return "key-provisioned";
    case TraceKind::kDenied: return "denied";
  }
  return "unknown";
}

KeyCustodian::KeyCustodian(Rng rng)
    : rng_(std::move(rng)), master_(crypto::generate_box_keypair(rng_)) {}

void KeyCustodian::trust_platform(const std::string& id, Bytes key) {
  std::lock_guard lock(mu_);
  platforms_[id] = std::move(key);
}

void KeyCustodian::approve_regulator_code(const Digest& measurement) {
  std::lock_guard lock(mu_);
  approved_.insert(measurement);
}

Bytes KeyCustodian::issue_nonce() {
  std::lock_guard lock(mu_);
  Bytes n = rng_.bytes(16);
  nonces_.insert(n);
  return n;
}

std::optional<Bytes> KeyCustodian::provision(
    const te::AttestationReport& report) {
  std::lock_guard lock(mu_);
  auto p = platforms_.find(report.platform_id);
  if (p == platforms_.end() || !te::verify_report(report, p->second)) {
    return std::nullopt;
  }
  if (!approved_.contains(report.measurement)) return std::nullopt;
  if (nonces_.erase(report.nonce) == 0) return std::nullopt;
  return crypto::box_seal(report.session_public_key, master_.private_key,
                          as_bytes(kMasterKeyAad), rng_);
}

te::Manifest regulator_manifest() {
  te::Manifest m;
  m.name = "regulator";
  m.version = "1";
  m.output_types = {crypto::TypePattern::parse("AccessDecision")};
  m.callback = true;
  return m;
}

Regulator::Regulator(std::string name, Rng rng, const Clock& clock,
                     const identity::IdentityAuthority& authority,
                     crypto::BoxKeyPair master)
    : name_(std::move(name)),
      clock_(clock),
      authority_(authority),
      rng_(std::move(rng)),
      master_(std::move(master)) {
  signing_ = crypto::generate_signing_keypair(rng_);
}

Regulator::Regulator(std::string name, Rng rng, const Clock& clock,
                     const identity::IdentityAuthority& authority)
    : Regulator(std::move(name), rng.fork("master"), clock, authority,
                crypto::generate_box_keypair(rng)) {}

std::unique_ptr<Regulator> Regulator::bootstrap(
    std::string name, Rng rng, const Clock& clock,
    const identity::IdentityAuthority& authority, KeyCustodian& custodian,
    const te::Platform& platform, ByteView regulator_code) {
  Rng session_rng = rng.fork("bootstrap-session");
  const crypto::BoxKeyPair session = crypto::generate_box_keypair(session_rng);
  const Digest m = te::measure(regulator_manifest(), regulator_code);
  const te::AttestationReport report =
      platform.attest(m, session.public_key, Bytes{}, custodian.issue_nonce());
  const auto wrapped = custodian.provision(report);
  if (!wrapped) {
    throw Error(ErrorCode::kAccessDenied, "custodian refused regulator code");
  }
  auto sk = crypto::box_open(session.private_key, *wrapped,
                             as_bytes(kMasterKeyAad));
  if (!sk) throw Error(ErrorCode::kInternal, "master key unwrap failed");
  return std::make_unique<Regulator>(
      std::move(name), std::move(rng), clock, authority,
      crypto::BoxKeyPair{custodian.master_public_key(), std::move(*sk)});
}

void Regulator::trust_platform(const std::string& id, Bytes key) {
  std::lock_guard lock(mu_);
  platforms_[id] = std::move(key);
}

void Regulator::trust_approver(const std::string& approver,
                               const std::string& attribute,
                               crypto::RsaPublicKey key) {
  std::lock_guard lock(mu_);
  approvers_.insert_or_assign({approver, attribute}, std::move(key));
}

void Regulator::load_rules(RuleSet rules) {
  std::lock_guard lock(mu_);
  rules_ = std::move(rules);
  audit_.append("rules", "LOADED:" + std::to_string(rules_.rules.size()),
                as_bytes(rules_.serialize()), clock_.now());
}

RuleSet Regulator::rules() const {
  std::lock_guard lock(mu_);
  return rules_;
}

RegistryEntry Regulator::approve_te(const te::Manifest& manifest,
                                    ByteView code_image,
                                    std::string_view risk_annotation) {
  const Digest m = te::measure(manifest, code_image);
  std::lock_guard lock(mu_);
  try {
    check_structure(manifest, risk_annotation);
  } catch (const Error& e) {
    const std::string check = e.detail().substr(0, e.detail().find(':'));
    audit_.append("approval", "TE_REJECTED:" + check, manifest.canonical_bytes(),
                  clock_.now());
    throw;
  }
  RegistryEntry entry{m, manifest, std::string(risk_annotation), manifest.name};
  registry_.insert_or_assign(m, entry);
  audit_.append("approval", "TE_APPROVED:" + short_hex(m),
                manifest.canonical_bytes(), clock_.now());
  trace_locked(TraceKind::kTeApproved, manifest.name);
  return entry;
}

std::optional<RegistryEntry> Regulator::registry_lookup(
    const Digest& measurement) const {
  std::lock_guard lock(mu_);
  auto it = registry_.find(measurement);
  if (it == registry_.end()) return std::nullopt;
  return it->second;
}

ConsentOutcome Regulator::record_consent(const ConsentPredicate& predicate) {
  std::lock_guard lock(mu_);
  const Timestamp now = clock_.now();
  auto outcome = [&]() {
    if (predicate.subject.public_key.size() != crypto::kSigningPublicKeySize ||
        !crypto::verify(predicate.subject.public_key,
                        predicate.signed_portion(), predicate.signature)) {
      return ConsentOutcome::kBadSignature;
    }
    // Three-way exchange: the authority vouches for the vid's key.
    if (!authority_.authenticate(predicate.subject)) {
      return ConsentOutcome::kUnauthenticatedSubject;
    }
    if (predicate.expiry <= now) return ConsentOutcome::kExpired;
    if (facts_.nonce_used(predicate.nonce)) return ConsentOutcome::kReplay;
    return ConsentOutcome::kStored;
  }();
  audit_.append("consent", std::string(to_string(outcome)),
                predicate.signed_portion(), now);
  if (outcome == ConsentOutcome::kStored) {
    facts_.add_consent(predicate, now);
    trace_locked(TraceKind::kConsentRecorded, "v" + std::to_string(facts_.version()));
  }
  return outcome;
}

ConsentOutcome Regulator::revoke_consent(const ConsentRevocation& revocation) {
  std::lock_guard lock(mu_);
  const Timestamp now = clock_.now();
  auto outcome = [&]() {
    if (revocation.subject.public_key.size() != crypto::kSigningPublicKeySize ||
        !crypto::verify(revocation.subject.public_key,
                        revocation.signed_portion(), revocation.signature)) {
      return ConsentOutcome::kBadSignature;
    }
    if (!authority_.authenticate(revocation.subject)) {
      return ConsentOutcome::kUnauthenticatedSubject;
    }
    if (!facts_.revoke(revocation.subject.vid, revocation.consent_nonce)) {
      return ConsentOutcome::kUnknownConsent;
    }
    return ConsentOutcome::kStored;
  }();
  audit_.append("revocation", std::string(to_string(outcome)),
                revocation.signed_portion(), now);
  return outcome;
}

ApprovalOutcome Regulator::record_approval(const ApprovalPredicate& predicate) {
  std::lock_guard lock(mu_);
  const identity::Credential& c = predicate.credential;
  auto it = approvers_.find({c.issuer, c.attribute});
  const bool ok = it != approvers_.end() &&
                  identity::verify_credential(c, it->second);
  const ApprovalOutcome outcome =
      ok ? ApprovalOutcome::kStored : ApprovalOutcome::kBadSignature;
  audit_.append("approval", std::string(to_string(outcome)), c.serialize(),
                clock_.now());
  if (ok) {
    facts_.add_approval(c.issuer, c.subject_vid, c.attribute);
    trace_locked(TraceKind::kApprovalRecorded,
                 "v" + std::to_string(facts_.version()));
  }
  return outcome;
}

Bytes Regulator::issue_nonce() {
  std::lock_guard lock(mu_);
  Bytes n = rng_.bytes(16);
  outstanding_nonces_.insert(n);
  return n;
}

void Regulator::trace_locked(TraceKind kind, std::string ref) {
  trace_.push_back(TraceEvent{trace_.size(), kind, std::move(ref)});
}

bool Regulator::predicates_hold_locked(const DecisionRecord& record,
                                       Timestamp t, DenyReason* reason) const {
  for (const PredicateTemplate& p : record.instantiated) {
    if (p.kind == PredicateTemplate::Kind::kConsent) {
      switch (facts_.consent_status(p.a, p.b, p.c, record.type, t,
                                    record.facts_version)) {
        case ConsentStatus::kValid: continue;
        case ConsentStatus::kExpired:
          *reason = DenyReason::kExpiredConsent;
          return false;
        case ConsentStatus::kMissing:
          *reason = DenyReason::kPredicateMissing;
          return false;
      }
    } else if (!facts_.approval_holds(p.a, p.b, p.c, record.facts_version)) {
      *reason = DenyReason::kPredicateMissing;
      return false;
    }
  }
  return true;
}

AccessDecision Regulator::finish_locked(DecisionRecord record,
                                        const Bytes& wire, Bytes wrapped_key) {
  const std::string detail =
      record.granted ? "GRANT:" + record.decision_id
                     : "DENY:" + std::string(to_string(record.reason));
  audit_.append("access", detail, wire, record.at);
  if (!record.granted) {
    trace_locked(TraceKind::kDenied, std::string(to_string(record.reason)));
  }
  AccessDecision d{record.granted, record.reason, record.decision_id,
                   record.rule_id, std::move(wrapped_key)};
  decisions_.push_back(std::move(record));
  return d;
}

AccessDecision Regulator::authorize(const AccessRequest& q) {
  const Bytes wire = q.serialize();
  std::lock_guard lock(mu_);
  const Timestamp now = clock_.now();

  DecisionRecord rec;
  rec.decision_id = name_ + "-d" + std::to_string(next_decision_++);
  rec.at = now;
  rec.type = q.claimed_input_type;
  auto deny = [&](DenyReason r) {
    rec.granted = false;
    rec.reason = r;
    return finish_locked(std::move(rec), wire, {});
  };

  // (1) Attestation: platform signature, registry, freshness.
  const bool nonce_fresh = outstanding_nonces_.erase(q.request_nonce) > 0;
  auto platform = platforms_.find(q.attestation.platform_id);
  if (platform == platforms_.end() ||
      !te::verify_report(q.attestation, platform->second)) {
    return deny(DenyReason::kTeUnknown);
  }
  auto reg = registry_.find(q.attestation.measurement);
  if (reg == registry_.end()) return deny(DenyReason::kTeUnknown);
  if (!nonce_fresh || q.attestation.nonce != q.request_nonce) {
    return deny(DenyReason::kStaleNonce);
  }
  const te::Manifest& manifest = reg->second.manifest;
  trace_locked(TraceKind::kTeAttested, rec.decision_id);

  // (2) Requester authentication, sinks only.
  if (manifest.sink) {
    if (!q.requester) return deny(DenyReason::kRequesterUnauthenticated);
    const RequesterProof& who = *q.requester;
    const bool key_ok =
        who.certificate.public_key.size() == crypto::kSigningPublicKeySize &&
        authority_.authenticate(who.certificate) &&
        crypto::verify(who.certificate.public_key, q.possession_message(),
                       who.possession_signature);
    if (!key_ok) return deny(DenyReason::kRequesterUnauthenticated);
    if (who.role_credential) {
      const identity::Credential& c = *who.role_credential;
      auto ak = approvers_.find({c.issuer, c.attribute});
      if (c.subject_vid != who.certificate.vid || ak == approvers_.end() ||
          !identity::verify_credential(c, ak->second)) {
        return deny(DenyReason::kRequesterUnauthenticated);
      }
      facts_.add_approval(c.issuer, c.subject_vid, c.attribute);
    }
    trace_locked(TraceKind::kRequesterAuthenticated, rec.decision_id);
  }

  // Data-type authentication: the wrapped key only opens under the type and
  // subject it was sealed with.
  auto data_key = crypto::unwrap_data_key(master_.private_key, q.wrapped_key,
                                          q.claimed_input_type, q.subject);
  if (!data_key) return deny(DenyReason::kTypeUnauthenticated);
  trace_locked(TraceKind::kTypeAuthenticated, rec.decision_id);

  // (3) Rule selection: highest priority match wins.
  const AuthRule* selected = nullptr;
  if (manifest.accepts_input(q.claimed_input_type)) {
    for (const AuthRule& r : rules_.rules) {
      if (!r.te.matches(manifest.name, reg->first)) continue;
      if (!r.data.matches(q.claimed_input_type)) continue;
      Bindings b;
      if (r.data.variable()) {
        if (!q.subject) continue;
        b[*r.data.variable()] = vid_object(*q.subject);
      }
      if (r.requester) {
        if (!manifest.sink || q.requester->role != r.requester->role) continue;
        b[r.requester->variable] = vid_object(q.requester->certificate.vid);
      }
      if (r.window && !r.window->contains(now)) continue;
      selected = &r;
      rec.bindings = std::move(b);
      break;
    }
  }
  if (!selected) return deny(DenyReason::kNoRule);
  rec.rule_id = selected->rule_id;
  for (const PredicateTemplate& p : selected->required) {
    rec.instantiated.push_back(p.instantiate(rec.bindings));
  }
  rec.facts_version = facts_.version();
  trace_locked(TraceKind::kRuleInstantiated, rec.rule_id);

  // (4) Predicates against the fact stores.
  DenyReason why = DenyReason::kPredicateMissing;
  if (!predicates_hold_locked(rec, now, &why)) return deny(why);

  // (5) Release the data key to the attested session key. This is the only
  // place a data key leaves the regulator.
  rec.granted = true;
  Bytes wrapped = crypto::box_seal(
      q.attestation.session_public_key, *data_key,
      grant_aad(rec.decision_id, q.claimed_input_type, q.subject), rng_);
  ++key_releases_;
  trace_locked(TraceKind::kKeyProvisioned, rec.decision_id);
  return finish_locked(std::move(rec), wire, std::move(wrapped));
}

AccessDecision Regulator::handle(ByteView access_request) {
  return authorize(AccessRequest::parse(access_request));
}

std::optional<identity::LinkGrant> Regulator::authorize_link(
    const identity::LinkRequest& request) {
  std::lock_guard lock(mu_);
  const Digest digest = request.digest();
  if (!rules_.link_purposes.contains(request.purpose)) {
    audit_.append("link-decision", "DENY:NO_RULE", digest, clock_.now());
    return std::nullopt;
  }
  identity::LinkGrant g{name_ + "-lg" + std::to_string(next_link_++),
                        request.purpose, digest, {}};
  g.signature = crypto::sign(signing_.private_key, g.signed_portion());
  audit_.append("link-decision", "GRANT:" + g.grant_id, digest, clock_.now());
  return g;
}

bool Regulator::replay_decision(const std::string& decision_id) const {
  std::lock_guard lock(mu_);
  auto it = std::find_if(decisions_.begin(), decisions_.end(),
                         [&](const auto& d) { return d.decision_id == decision_id; });
  if (it == decisions_.end() || !it->granted) return false;
  DenyReason unused = DenyReason::kPredicateMissing;
  return predicates_hold_locked(*it, it->at, &unused);
}

std::size_t Regulator::key_releases() const {
  std::lock_guard lock(mu_);
  return key_releases_;
}

std::vector<DecisionRecord> Regulator::decisions() const {
  std::lock_guard lock(mu_);
  return decisions_;
}

std::vector<TraceEvent> Regulator::trace() const {
  std::lock_guard lock(mu_);
  return trace_;
}

}  // namespace pbd::regulator
