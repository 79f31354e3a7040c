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
#include <set>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "doctest.h"
#include "pbd/crypto/hash.hpp"
#include "pbd/identity/credential.hpp"
#include "pbd/identity/identity.hpp"
#include "support/oracles.hpp"

using namespace pbd;
using namespace pbd::identity;
using pbd::testing::error_code_of;

namespace {

// HMAC-SHA256 over the hand-assembled derivation frame.
Digest oracle_vid(const Digest& secret, const std::string& org,
                  std::uint64_t counter) {
  Bytes msg = {'V', 'I', 'D', '1'};
  append_u32_be(msg, static_cast<std::uint32_t>(org.size()));
  msg.insert(msg.end(), org.begin(), org.end());
  append_u32_be(msg, 8);
  append_u64_be(msg, counter);
  Digest out;
  unsigned int len = 0;
  HMAC(EVP_sha256(), secret.data(), static_cast<int>(secret.size()), msg.data(),
       msg.size(), out.data(), &len);
  return out;
}

IdentityAuthority make_authority(std::uint64_t seed = 1) {
  return IdentityAuthority("authority", Rng(seed));
}

}  // namespace

TEST_CASE("enroll yields unique masters and rejects duplicates") {
  IdentityAuthority ia = make_authority();
  const MasterIdentity a = ia.enroll("alice");
  CHECK(a.master_id == crypto::hash(a.master_secret));
  CHECK(error_code_of([&] { ia.enroll("alice"); }) ==
        ErrorCode::kDuplicateEnrollment);
  std::set<Digest> ids{a.master_id};
  for (int i = 0; i < 10000; ++i) {
    ids.insert(ia.enroll("person-" + std::to_string(i)).master_id);
  }
  CHECK(ids.size() == 10001);
}

TEST_CASE("derive_vid matches an independent HMAC oracle") {
  IdentityAuthority ia = make_authority();
  const MasterIdentity m = ia.enroll("bob");
  for (std::uint64_t ctr : {0ull, 1ull, 99ull}) {
    CHECK(derive_vid(m, "HospitalA", ctr).value ==
          oracle_vid(m.master_secret, "HospitalA", ctr));
  }
  CHECK(derive_vid(m, "HospitalA").value == derive_vid(m, "HospitalA").value);
  CHECK(derive_vid(m, "HospitalA").value != derive_vid(m, "BankB").value);
}

TEST_CASE("1000 masters across two orgs give no collisions") {
  IdentityAuthority ia = make_authority(2);
  std::set<Digest> values;
  for (int i = 0; i < 1000; ++i) {
    const MasterIdentity m = ia.enroll("p" + std::to_string(i));
    values.insert(derive_vid(m, "HospitalA").value);
    values.insert(derive_vid(m, "BankB").value);
  }
  CHECK(values.size() == 2000);
}

TEST_CASE("check_derivation accepts only honest vids") {
  IdentityAuthority ia = make_authority();
  const MasterIdentity m = ia.enroll("carol");
  const MasterIdentity other = ia.enroll("dave");
  const Digest vid = derive_vid(m, "HospitalA", 3).value;
  CHECK(ia.check_derivation(vid, m.master_id, "HospitalA", 3));
  CHECK_FALSE(ia.check_derivation(vid, m.master_id, "HospitalA", 4));
  CHECK_FALSE(ia.check_derivation(derive_vid(other, "HospitalA", 3).value,
                                  m.master_id, "HospitalA", 3));
  Rng rng(3);
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    accepted += ia.check_derivation(rng.digest(), m.master_id, "HospitalA", 0);
  }
  CHECK(accepted == 0);
  CHECK(error_code_of([&] {
          ia.check_derivation(vid, rng.digest(), "HospitalA", 3);
        }) == ErrorCode::kUnknownMaster);
  // The check log never records the vid.
  for (const DerivationCheck& c : ia.derivation_log()) {
    CHECK(c.master_id != vid);
  }
}

TEST_CASE("vid key certificates round trip through the authority") {
  IdentityAuthority ia = make_authority();
  const MasterIdentity m = ia.enroll("erin");
  const VirtualIdentity vid = derive_vid(m, "HospitalA");
  const crypto::KeyPair key = derive_vid_signing_key(m, "HospitalA");
  const VidKeyCertificate cert = ia.certify_vid_key(
      vid.value, m.master_id, "HospitalA", 0, key.public_key);
  CHECK(ia.authenticate(cert));
  CHECK(VidKeyCertificate::parse(cert.serialize()) == cert);

  VidKeyCertificate forged = cert;
  forged.vid[0] ^= 1;
  CHECK_FALSE(ia.authenticate(forged));

  Rng rng(4);
  const crypto::KeyPair stranger = crypto::generate_signing_keypair(rng);
  CHECK(error_code_of([&] {
          ia.certify_vid_key(vid.value, m.master_id, "HospitalA", 0,
                             stranger.public_key);
        }) == ErrorCode::kEvidenceRejected);
}

TEST_CASE("blind issuance round trip lands on the destination vid") {
  CredentialIssuer approver("ministry", Rng(5), 1024);
  Rng rng(6);
  const Digest vid_a = rng.digest();
  const Digest vid_b = rng.digest();
  approver.record_evidence("approved:DBT-beneficiary", vid_a);
  const auto& pk = approver.public_key("approved:DBT-beneficiary");

  BlindIssuance st = begin_blind_issuance(vid_b, "approved:DBT-beneficiary",
                                          "ministry", pk, rng);
  const Bytes bsig = approver.issue_blinded(vid_a, "approved:DBT-beneficiary",
                                            st.blinded.value);
  const Credential cred = finish_blind_issuance(st, bsig, pk);
  CHECK(cred.subject_vid == vid_b);
  CHECK(verify_credential(cred, pk));
  CHECK(Credential::parse(cred.serialize()) == cred);

  for (const IssuerTranscriptRow& row : approver.transcript()) {
    CHECK_FALSE(contains(row.blinded_value, vid_b));
    CHECK_FALSE(contains(row.blinded_signature, cred.signature));
    CHECK(row.known_vid != vid_b);
  }
  CHECK(error_code_of([&] {
          approver.issue_blinded(vid_b, "approved:DBT-beneficiary",
                                 st.blinded.value);
        }) == ErrorCode::kEvidenceRejected);
}

TEST_CASE("forged credentials never verify") {
  CredentialIssuer council("medical-council", Rng(7), 1024);
  Rng rng(8);
  const Digest vid = rng.digest();
  council.record_evidence("licensed-doctor", vid);
  const Credential real = council.issue_plain(vid, "licensed-doctor");
  const auto& pk = council.public_key("licensed-doctor");
  CHECK(verify_credential(real, pk));
  CHECK(error_code_of([&] { council.issue_plain(rng.digest(), "licensed-doctor"); }) ==
        ErrorCode::kEvidenceRejected);

  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    Credential f = real;
    if (i % 2) {
      f.signature = rng.bytes(real.signature.size());
    } else {
      const std::size_t bit = static_cast<std::size_t>(i) % (f.signature.size() * 8);
      f.signature[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    }
    accepted += verify_credential(f, pk);
  }
  CHECK(accepted == 0);

  Credential moved = real;
  moved.subject_vid = rng.digest();
  CHECK_FALSE(verify_credential(moved, pk));
  Credential relabelled = real;
  relabelled.attribute = "licensed-surgeon";
  CHECK_FALSE(verify_credential(relabelled, pk));
}

TEST_CASE("link_identities needs a matching grant") {
  IdentityAuthority ia = make_authority(9);
  Rng rng(10);
  const crypto::KeyPair reg = crypto::generate_signing_keypair(rng);
  ia.trust_regulator(reg.public_key);
  regulator::AuditLog audit;

  const MasterIdentity m1 = ia.enroll("frank");
  const MasterIdentity m2 = ia.enroll("grace");
  auto request = [&](const MasterIdentity& a, const MasterIdentity& b) {
    return LinkRequest{"police",
                       derive_vid(a, "A").value,
                       derive_vid(b, "B").value,
                       encrypt_uid(ia.link_public_key(), a.master_id, rng),
                       encrypt_uid(ia.link_public_key(), b.master_id, rng),
                       "fraud-investigation"};
  };
  auto grant_for = [&](const LinkRequest& r, std::string id) {
    LinkGrant g{std::move(id), r.purpose, r.digest(), {}};
    g.signature = crypto::sign(reg.private_key, g.signed_portion());
    return g;
  };

  const LinkRequest same = request(m1, m1);
  CHECK(same.enc_uid_a != same.enc_uid_b);
  CHECK(ia.link_identities(same, grant_for(same, "g1"), audit, 5).linked);
  const LinkRequest diff = request(m1, m2);
  CHECK_FALSE(ia.link_identities(diff, grant_for(diff, "g2"), audit, 6).linked);

  const LinkRequest fresh = request(m2, m2);
  CHECK(error_code_of([&] { ia.link_identities(fresh, std::nullopt, audit, 7); }) ==
        ErrorCode::kAccessDenied);
  CHECK(error_code_of([&] {
          ia.link_identities(fresh, grant_for(same, "g3"), audit, 7);
        }) == ErrorCode::kAccessDenied);
  CHECK(error_code_of([&] {
          ia.link_identities(same, grant_for(same, "g1"), audit, 7);
        }) == ErrorCode::kAccessDenied);

  LinkRequest garbled = request(m1, m2);
  garbled.enc_uid_b[40] ^= 1;
  CHECK(error_code_of([&] {
          ia.link_identities(garbled, grant_for(garbled, "g4"), audit, 8);
        }) == ErrorCode::kDecryptFail);

  const std::string text = audit.serialize();
  CHECK(audit.verify().ok);
  for (const auto* m : {&m1, &m2}) {
    CHECK(text.find(hex(m->master_id)) == std::string::npos);
    CHECK(text.find(hex(derive_vid(*m, "A").value)) == std::string::npos);
  }
}
