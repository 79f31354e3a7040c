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
#include <algorithm>

#include "doctest.h"
#include "pbd/regulator/regulator.hpp"
#include "pbd/te/runtime.hpp"
#include "support/mini_world.hpp"
#include "support/oracles.hpp"

using namespace pbd;
using namespace pbd::regulator;
using pbd::testing::error_code_of;
using pbd::testing::MiniWorld;
using pbd::testing::Person;

namespace {

// Hand-built request, bypassing the runtime so each field can be varied.
AccessRequest make_request(MiniWorld& w, const te::TeInstance& te,
                           const crypto::Envelope& env,
                           const crypto::BoxKeyPair& session,
                           const Person* requester = nullptr,
                           const char* role = "doctor") {
  AccessRequest q;
  q.request_nonce = w.reg.issue_nonce();
  q.attestation = w.platform.attest(te.measurement(), session.public_key,
                                    w.scanner.public_key, q.request_nonce);
  q.claimed_input_type = env.type_id;
  q.subject = env.subject;
  q.wrapped_key = env.wrapped_key;
  if (requester) {
    q.requester = RequesterProof{role, requester->cert, {}, std::nullopt};
    q.requester->possession_signature =
        crypto::sign(requester->key.private_key, q.possession_message());
  }
  return q;
}

// The possession signature covers type and subject, so edits must re-sign.
void resign(AccessRequest& q, const Person& who) {
  q.requester->possession_signature =
      crypto::sign(who.key.private_key, q.possession_message());
}

crypto::Envelope record_for(MiniWorld& w, const Person& who) {
  return crypto::seal(crypto::TypeId("DT4/MedicalRecord"), who.vid.value,
                      te::encode_record({{"diagnosis", "clear"}}),
                      w.reg.public_key(), w.scanner, w.rng);
}

std::size_t audit_count(const AuditLog& log, std::string_view prefix) {
  std::size_t n = 0;
  for (const auto& e : log.entries()) n += e.detail.rfind(prefix, 0) == 0;
  return n;
}

struct Context {
  bool attested, consent, rule_match, fresh;
};

// Truth-table oracle: the only GRANT is the all-true row; each failing
// dimension maps to the reason of the first check that observes it.
std::optional<DenyReason> oracle(const Context& c) {
  if (!c.attested) return DenyReason::kTeUnknown;
  if (!c.rule_match) return DenyReason::kNoRule;
  if (!c.consent) return DenyReason::kPredicateMissing;
  if (!c.fresh) return DenyReason::kExpiredConsent;
  return std::nullopt;
}

}  // namespace

TEST_CASE("approve_te names the structural check that failed") {
  MiniWorld w;
  auto rejected_check = [&](te::Manifest m, std::string annotation = "risk") {
    try {
      w.reg.approve_te(m, to_bytes("code"), annotation);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kStructuralReject);
      return e.detail().substr(0, e.detail().find(':'));
    }
    return std::string("approved");
  };
  te::Manifest no_callback = w.mri.manifest;
  no_callback.callback = false;
  CHECK(rejected_check(no_callback) == "callback");
  te::Manifest no_outputs = w.mri.manifest;
  no_outputs.output_types.clear();
  CHECK(rejected_check(no_outputs) == "outputs");
  te::Manifest wildcard = w.mri.manifest;
  wildcard.output_types = {crypto::TypePattern::parse("DT*")};
  CHECK(rejected_check(wildcard) == "outputs");
  te::Manifest bare_sink = w.terminal.manifest;
  bare_sink.minimisation.reset();
  CHECK(rejected_check(bare_sink) == "minimisation");
  CHECK(rejected_check(w.mri.manifest, "  ") == "annotation");
  CHECK(rejected_check(w.mri.manifest) == "approved");
  CHECK(audit_count(w.reg.audit(), "TE_REJECTED:") == 5);
  CHECK_FALSE(w.reg.registry_lookup(te::measure(no_callback, to_bytes("code"))));
}

TEST_CASE("consent intake checks signature, subject, expiry and replay") {
  MiniWorld w;
  auto pred = sign_consent(w.patient.cert, w.patient.key, "scan-analysis",
                           "HospitalA", {crypto::TypePattern::parse("DT2/*")},
                           w.clock.now() + 60, w.rng);
  ConsentPredicate forged = pred;
  forged.verb = "sell";
  CHECK(w.reg.record_consent(forged) == ConsentOutcome::kBadSignature);
  CHECK(w.reg.record_consent(pred) == ConsentOutcome::kStored);
  CHECK(w.reg.record_consent(pred) == ConsentOutcome::kReplay);

  auto stale = sign_consent(w.patient.cert, w.patient.key, "scan-analysis",
                            "HospitalA", {crypto::TypePattern::parse("DT2/*")},
                            w.clock.now(), w.rng);
  CHECK(w.reg.record_consent(stale) == ConsentOutcome::kExpired);

  // A key the authority never certified.
  identity::VidKeyCertificate self_made = w.patient.cert;
  const crypto::KeyPair rogue = crypto::generate_signing_keypair(w.rng);
  self_made.public_key = rogue.public_key;
  auto unvouched = sign_consent(self_made, rogue, "scan-analysis", "HospitalA",
                                {crypto::TypePattern::parse("DT2/*")},
                                w.clock.now() + 60, w.rng);
  CHECK(w.reg.record_consent(unvouched) ==
        ConsentOutcome::kUnauthenticatedSubject);
}

TEST_CASE("approvals verify against the trusted issuer key") {
  MiniWorld w;
  const identity::Credential good =
      w.council.issue_plain(w.doctor.vid.value, "licensed-doctor");
  CHECK(w.reg.record_approval({good, ApprovalVia::kDirect}) ==
        ApprovalOutcome::kStored);
  identity::Credential bad = good;
  bad.subject_vid = w.patient.vid.value;
  CHECK(w.reg.record_approval({bad, ApprovalVia::kDirect}) ==
        ApprovalOutcome::kBadSignature);
  identity::Credential unknown_attr = good;
  unknown_attr.attribute = "surgeon";
  CHECK(w.reg.record_approval({unknown_attr, ApprovalVia::kDirect}) ==
        ApprovalOutcome::kBadSignature);

  // Blind path: issuer knows the doctor under another vid.
  const Person d2 = w.person("doctor-2", "HospitalA");
  const auto at_council = identity::derive_vid(d2.master, "MedicalCouncil");
  w.council.record_evidence("licensed-doctor", at_council.value);
  const auto& pk = w.council.public_key("licensed-doctor");
  auto state = identity::begin_blind_issuance(d2.vid.value, "licensed-doctor",
                                              "medical-council", pk, w.rng);
  const Bytes bsig = w.council.issue_blinded(at_council.value, "licensed-doctor",
                                             state.blinded.value);
  const auto cred = identity::finish_blind_issuance(state, bsig, pk);
  CHECK(w.reg.record_approval({cred, ApprovalVia::kBlindCredential}) ==
        ApprovalOutcome::kStored);
}

TEST_CASE("rule files round-trip and reject malformed rules with a line") {
  const RuleSet rs = RuleSet::parse(
      std::string(pbd::testing::kMiniRules) + "link purpose=fraud-audit\n");
  CHECK(rs.rules.size() == 2);
  CHECK(rs.link_purposes.contains("fraud-audit"));
  const RuleSet again = RuleSet::parse(rs.serialize());
  CHECK(again.rules == rs.rules);

  auto config_error = [](std::string text) {
    try {
      RuleSet::parse(text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
      return e.detail();
    }
    return std::string("parsed");
  };
  const std::string ok =
      "rule id=a priority=1 te=* data=DT1(x) requester=- "
      "requires=consent(x,read,org) window=-\n";
  CHECK(config_error(ok) == "parsed");
  CHECK(config_error(ok + ok).rfind("line 2", 0) == 0);
  CHECK(config_error("rule id=a priority=1 te=* data=DT1(x) requester=- "
                     "requires=consent(z,v,o) window=-\n") != "parsed");
  CHECK(config_error("rule id=a priority=1 te=* data=DT1(x) requester=- "
                     "requires=consent(Alice,v,o) window=-\n") != "parsed");
  CHECK(config_error("rule id=a priority=1 te=* data=DT1(x) requester=- "
                     "requires=- window=- colour=red\n") != "parsed");
  CHECK(config_error("rule id=a priority=one te=* data=DT1 requester=- "
                     "requires=- window=-\n") != "parsed");
}

TEST_CASE("each failed check yields its own deny reason") {
  MiniWorld w;
  w.consent(w.patient, "consulted", vid_object(w.doctor.vid.value), "DT4/*",
            100);
  w.approve_doctor();
  const auto env = record_for(w, w.patient);
  const auto session = crypto::generate_box_keypair(w.rng);

  SUBCASE("grant, then the nonce is spent") {
    AccessRequest q = make_request(w, w.terminal, env, session, &w.doctor);
    CHECK(w.reg.authorize(q).granted);
    CHECK(w.reg.authorize(q).reason == DenyReason::kStaleNonce);
  }
  SUBCASE("untrusted platform") {
    Rng other(55);
    te::Platform rogue("platform-1", other);
    AccessRequest q = make_request(w, w.terminal, env, session, &w.doctor);
    q.attestation = rogue.attest(w.terminal.measurement(), session.public_key,
                                 {}, q.request_nonce);
    CHECK(w.reg.authorize(q).reason == DenyReason::kTeUnknown);
  }
  SUBCASE("missing or unproven requester at a sink") {
    AccessRequest q = make_request(w, w.terminal, env, session);
    CHECK(w.reg.authorize(q).reason == DenyReason::kRequesterUnauthenticated);
    AccessRequest q2 = make_request(w, w.terminal, env, session, &w.doctor);
    q2.requester->possession_signature[0] ^= 1;
    CHECK(w.reg.authorize(q2).reason == DenyReason::kRequesterUnauthenticated);
    AccessRequest q3 = make_request(w, w.terminal, env, session, &w.doctor);
    q3.requester->role_credential =
        w.council.issue_plain(w.doctor.vid.value, "licensed-doctor");
    q3.requester->role_credential->subject_vid = w.patient.vid.value;
    CHECK(w.reg.authorize(q3).reason == DenyReason::kRequesterUnauthenticated);
  }
  SUBCASE("claimed type or subject differs from the sealed one") {
    AccessRequest q = make_request(w, w.terminal, env, session, &w.doctor);
    q.claimed_input_type = crypto::TypeId("DT4/MedicalRecordX");
    resign(q, w.doctor);
    CHECK(w.reg.authorize(q).reason == DenyReason::kTypeUnauthenticated);
    AccessRequest q2 = make_request(w, w.terminal, env, session, &w.doctor);
    q2.subject = w.doctor.vid.value;
    resign(q2, w.doctor);
    CHECK(w.reg.authorize(q2).reason == DenyReason::kTypeUnauthenticated);
  }
  SUBCASE("wrong role") {
    AccessRequest q =
        make_request(w, w.terminal, env, session, &w.doctor, "janitor");
    CHECK(w.reg.authorize(q).reason == DenyReason::kNoRule);
  }
  SUBCASE("consent for another doctor") {
    const Person other = w.person("doctor-9", "HospitalA");
    AccessRequest q = make_request(w, w.terminal, env, session, &other);
    CHECK(w.reg.authorize(q).reason == DenyReason::kPredicateMissing);
  }
  SUBCASE("expired consent") {
    w.clock.advance(101);
    AccessRequest q = make_request(w, w.terminal, env, session, &w.doctor);
    CHECK(w.reg.authorize(q).reason == DenyReason::kExpiredConsent);
  }
  CHECK(w.reg.key_releases() == audit_count(w.reg.audit(), "GRANT:"));
  CHECK(w.reg.audit().verify().ok);
}

TEST_CASE("authorize agrees with the 16-row truth table for both rules") {
  for (int rule = 0; rule < 2; ++rule) {
    for (int bits = 0; bits < 16; ++bits) {
      const Context c{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0,
                      (bits & 8) != 0};
      CAPTURE(rule);
      CAPTURE(bits);
      MiniWorld w;
      const bool doctor_rule = rule == 1;
      const te::TeInstance& te = doctor_rule ? w.terminal : w.mri;
      te::TeInstance presented = te;
      if (!c.attested) presented.code.push_back(0);
      if (c.consent) {
        if (doctor_rule) {
          w.consent(w.patient, "consulted", vid_object(w.doctor.vid.value),
                    "DT4/*", 100);
          w.approve_doctor();
        } else {
          w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*", 100);
        }
      }
      if (!c.fresh) w.clock.advance(101);
      // A subjectless envelope binds no `x`, so no rule can match.
      const crypto::SubjectTag subject =
          c.rule_match ? crypto::SubjectTag(w.patient.vid.value) : std::nullopt;
      const crypto::TypeId type(doctor_rule ? "DT4/MedicalRecord"
                                            : "DT2/MRIScan");
      const auto env = crypto::seal(type, subject, to_bytes("payload"),
                                    w.reg.public_key(), w.scanner, w.rng);
      const auto session = crypto::generate_box_keypair(w.rng);
      const AccessDecision d = w.reg.authorize(make_request(
          w, presented, env, session, doctor_rule ? &w.doctor : nullptr));
      const auto expect = oracle(c);
      CHECK(d.granted == !expect.has_value());
      if (expect) CHECK(d.reason == *expect);
      CHECK(w.reg.key_releases() == (d.granted ? 1u : 0u));
    }
  }
}

TEST_CASE("a granted decision replays against the facts as they stood") {
  MiniWorld w;
  const auto pred = sign_consent(
      w.patient.cert, w.patient.key, "scan-analysis", "HospitalA",
      {crypto::TypePattern::parse("DT2/*")}, w.clock.now() + 100, w.rng);
  REQUIRE(w.reg.record_consent(pred) == ConsentOutcome::kStored);
  const auto env = w.scan(w.patient).envelope;
  const auto session = crypto::generate_box_keypair(w.rng);
  const AccessDecision d1 = w.reg.authorize(make_request(w, w.mri, env, session));
  REQUIRE(d1.granted);
  CHECK(d1.rule_id == "mri-ingest");

  CHECK(w.reg.revoke_consent(sign_revocation(w.patient.cert, w.patient.key,
                                             pred.nonce, w.clock.now())) ==
        ConsentOutcome::kStored);
  CHECK(w.reg.revoke_consent(sign_revocation(w.patient.cert, w.patient.key,
                                             to_bytes("nope"), w.clock.now())) ==
        ConsentOutcome::kUnknownConsent);
  const AccessDecision d2 = w.reg.authorize(make_request(w, w.mri, env, session));
  CHECK(d2.reason == DenyReason::kPredicateMissing);
  CHECK(w.reg.replay_decision(d1.decision_id));
  CHECK_FALSE(w.reg.replay_decision(d2.decision_id));

  const auto decisions = w.reg.decisions();
  REQUIRE(decisions.size() == 2);
  CHECK(decisions[0].instantiated[0].canonical() ==
        "consent(" + vid_object(w.patient.vid.value) +
            ",scan-analysis,HospitalA)");
}

TEST_CASE("trace records the milestones of a grant in order") {
  MiniWorld w;
  w.consent(w.patient, "scan-analysis", "HospitalA", "DT2/*");
  const auto session = crypto::generate_box_keypair(w.rng);
  REQUIRE(w.reg.authorize(make_request(w, w.mri, w.scan(w.patient).envelope,
                                       session))
              .granted);
  std::vector<TraceKind> kinds;
  for (const auto& e : w.reg.trace()) kinds.push_back(e.kind);
  const std::vector<TraceKind> expect{
      TraceKind::kTeApproved,        TraceKind::kTeApproved,
      TraceKind::kConsentRecorded,   TraceKind::kTeAttested,
      TraceKind::kTypeAuthenticated, TraceKind::kRuleInstantiated,
      TraceKind::kKeyProvisioned};
  CHECK(kinds == expect);
}

TEST_CASE("access requests survive the wire and garbage is rejected") {
  MiniWorld w;
  const auto session = crypto::generate_box_keypair(w.rng);
  const AccessRequest q = make_request(w, w.terminal, record_for(w, w.patient),
                                       session, &w.doctor);
  const AccessRequest back = AccessRequest::parse(q.serialize());
  CHECK(back.serialize() == q.serialize());
  CHECK(back.requester->certificate == w.doctor.cert);
  CHECK(error_code_of([&] { w.reg.handle(to_bytes("ARQ1junk")); }) ==
        ErrorCode::kMalformed);
  for (auto r : {DenyReason::kTeUnknown, DenyReason::kExpiredConsent,
                 DenyReason::kTypeUnauthenticated}) {
    CHECK(deny_reason_from_string(to_string(r)) == r);
  }
}

TEST_CASE("the custodian releases the master key only to approved code") {
  MiniWorld w;
  KeyCustodian custodian(Rng(77));
  custodian.trust_platform(w.platform.id(), w.platform.public_key());
  const Bytes code = to_bytes("regulator-v1");
  CHECK(error_code_of([&] {
          Regulator::bootstrap("R2", Rng(1), w.clock, w.authority, custodian,
                               w.platform, code);
        }) == ErrorCode::kAccessDenied);
  custodian.approve_regulator_code(te::measure(regulator_manifest(), code));
  auto r2 = Regulator::bootstrap("R2", Rng(1), w.clock, w.authority, custodian,
                                 w.platform, code);
  CHECK(r2->public_key() == custodian.master_public_key());

  // Envelopes sealed to the custodian's key open through the bootstrapped
  // regulator.
  r2->trust_platform(w.platform.id(), w.platform.public_key());
  r2->load_rules(RuleSet::parse(
      "rule id=open priority=1 te=* data=DT1 requester=- requires=- window=-\n"));
  r2->approve_te(w.mri.manifest, w.mri.code, "risk");
  te::TeInstance any = w.mri;
  any.manifest.input_types = {crypto::TypePattern::parse("DT1")};
  r2->approve_te(any.manifest, any.code, "risk");
  const auto env = crypto::seal(crypto::TypeId("DT1"), std::nullopt,
                                te::encode_record({{"k", "v"}}),
                                custodian.master_public_key(), w.scanner, w.rng);
  const auto session = crypto::generate_box_keypair(w.rng);
  AccessRequest q;
  q.request_nonce = r2->issue_nonce();
  q.attestation = w.platform.attest(any.measurement(), session.public_key, {},
                                    q.request_nonce);
  q.claimed_input_type = env.type_id;
  q.wrapped_key = env.wrapped_key;
  CHECK(r2->authorize(q).granted);
}

TEST_CASE("link grants follow the rule file and are single use") {
  MiniWorld w;
  w.reg.load_rules(RuleSet::parse(std::string(pbd::testing::kMiniRules) +
                                  "link purpose=fraud-audit\n"));
  w.authority.trust_regulator(w.reg.signing_public_key());
  const Person p = w.person("citizen", "BankA");
  const auto vb = identity::derive_vid(p.master, "BankB");
  identity::LinkRequest req{
      "auditor",
      p.vid.value,
      vb.value,
      identity::encrypt_uid(w.authority.link_public_key(), p.master.master_id,
                            w.rng),
      identity::encrypt_uid(w.authority.link_public_key(), p.master.master_id,
                            w.rng),
      "marketing"};
  CHECK_FALSE(w.reg.authorize_link(req));
  req.purpose = "fraud-audit";
  const auto grant = w.reg.authorize_link(req);
  REQUIRE(grant);
  AuditLog log;
  CHECK(w.authority.link_identities(req, grant, log, w.clock.now()).linked);
  CHECK(error_code_of([&] {
          w.authority.link_identities(req, grant, log, w.clock.now());
        }) == ErrorCode::kAccessDenied);
  CHECK(audit_count(w.reg.audit(), "DENY:NO_RULE") == 1);
}
