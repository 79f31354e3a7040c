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
#include "pbd/identity/identity.hpp"

#include "pbd/common/error.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::identity {
namespace {

constexpr std::string_view kUidAad = "pbd-uid-v1";

Bytes derivation_input(std::string_view magic, std::string_view org_tag,
                       std::uint64_t counter) {
  return FrameWriter(magic).field(org_tag).field_u64(counter).finish();
}

Digest derive_value(const Digest& secret, std::string_view org_tag,
                    std::uint64_t counter) {
  return crypto::prf(secret, derivation_input("VID1", org_tag, counter));
}

crypto::KeyPair derive_key(const Digest& secret, std::string_view org_tag,
                           std::uint64_t counter) {
  const Digest seed =
      crypto::prf(secret, derivation_input("VSK1", org_tag, counter));
  return crypto::signing_keypair_from_seed(seed);
}

std::optional<Digest> open_uid(ByteView link_sk, ByteView enc_uid) {
  auto plain = crypto::box_open(link_sk, enc_uid, as_bytes(kUidAad));
  if (!plain || plain->size() != 32) return std::nullopt;
  Digest d;
  std::copy(plain->begin(), plain->end(), d.begin());
  return d;
}

}  // namespace

VirtualIdentity derive_vid(const MasterIdentity& master, std::string_view org_tag,
                           std::uint64_t counter) {
  return VirtualIdentity{derive_value(master.master_secret, org_tag, counter),
                         std::string(org_tag), counter};
}

crypto::KeyPair derive_vid_signing_key(const MasterIdentity& master,
                                       std::string_view org_tag,
                                       std::uint64_t counter) {
  return derive_key(master.master_secret, org_tag, counter);
}

Bytes VidKeyCertificate::signed_portion() const {
  return FrameWriter("VKC0").field(vid).field(public_key).finish();
}

Bytes VidKeyCertificate::serialize() const {
  return FrameWriter("VKC1").field(vid).field(public_key).field(signature).finish();
}

VidKeyCertificate VidKeyCertificate::parse(ByteView data) {
  FrameReader r(data, "VKC1");
  VidKeyCertificate c;
  c.vid = r.field_digest();
  c.public_key = r.field_bytes();
  c.signature = r.field_bytes();
  r.expect_end();
  return c;
}

Bytes encrypt_uid(ByteView authority_link_public_key, const Digest& master_id,
                  Rng& rng) {
  return crypto::box_seal(authority_link_public_key, master_id,
                          as_bytes(kUidAad), rng);
}

Digest LinkRequest::digest() const {
  return crypto::hash(FrameWriter("LRQ1")
                          .field(requesting_authority)
                          .field(vid_a)
                          .field(vid_b)
                          .field(enc_uid_a)
                          .field(enc_uid_b)
                          .field(purpose)
                          .finish());
}

Bytes LinkGrant::signed_portion() const {
  return FrameWriter("LGR1")
      .field(grant_id)
      .field(purpose)
      .field(request_digest)
      .finish();
}

IdentityAuthority::IdentityAuthority(std::string name, Rng rng)
    : name_(std::move(name)), rng_(std::move(rng)) {
  signing_ = crypto::generate_signing_keypair(rng_);
  link_ = crypto::generate_box_keypair(rng_);
}

void IdentityAuthority::trust_regulator(Bytes regulator_public_key) {
  std::lock_guard lock(mu_);
  regulator_key_ = std::move(regulator_public_key);
}

MasterIdentity IdentityAuthority::enroll(std::string_view dedup_key) {
  std::lock_guard lock(mu_);
  const Digest dedup = crypto::hash(dedup_key);
  if (!dedup_.insert(dedup).second) {
    throw Error(ErrorCode::kDuplicateEnrollment, "dedup key already enrolled");
  }
  MasterIdentity m;
  m.master_secret = rng_.digest();
  m.master_id = crypto::hash(m.master_secret);
  masters_.emplace(m.master_id, m.master_secret);
  return m;
}

bool IdentityAuthority::check_derivation(const Digest& vid,
                                         const Digest& master_id,
                                         std::string_view org_tag,
                                         std::uint64_t counter) {
  std::lock_guard lock(mu_);
  auto it = masters_.find(master_id);
  if (it == masters_.end()) {
    throw Error(ErrorCode::kUnknownMaster, "master_id not enrolled");
  }
  const Digest expected = derive_value(it->second, org_tag, counter);
  const bool ok = constant_time_equal(expected, vid);
  checks_.push_back({master_id, std::string(org_tag), counter, ok});
  return ok;
}

VidKeyCertificate IdentityAuthority::certify_vid_key(const Digest& vid,
                                                     const Digest& master_id,
                                                     std::string_view org_tag,
                                                     std::uint64_t counter,
                                                     ByteView public_key) {
  if (!check_derivation(vid, master_id, org_tag, counter)) {
    throw Error(ErrorCode::kEvidenceRejected, "vid not derived from master");
  }
  std::lock_guard lock(mu_);
  const crypto::KeyPair expected =
      derive_key(masters_.at(master_id), org_tag, counter);
  if (!constant_time_equal(expected.public_key, public_key)) {
    throw Error(ErrorCode::kEvidenceRejected, "key is not the vid's key");
  }
  VidKeyCertificate cert{vid, to_bytes(public_key), {}};
  cert.signature = crypto::sign(signing_.private_key, cert.signed_portion());
  return cert;
}

bool IdentityAuthority::authenticate(const VidKeyCertificate& cert) const {
  if (cert.public_key.size() != crypto::kSigningPublicKeySize) return false;
  return crypto::verify(signing_.public_key, cert.signed_portion(),
                        cert.signature);
}

LinkRecord IdentityAuthority::link_identities(
    const LinkRequest& request, const std::optional<LinkGrant>& grant,
    regulator::AuditLog& audit, Timestamp now) {
  const Digest request_digest = request.digest();
  std::lock_guard lock(mu_);
  const bool granted =
      grant && regulator_key_ && grant->purpose == request.purpose &&
      grant->request_digest == request_digest &&
      !used_grants_.contains(grant->grant_id) &&
      crypto::verify(*regulator_key_, grant->signed_portion(), grant->signature);
  if (!granted) {
    audit.append("link", "DENY:ACCESS_DENIED", request_digest, now);
    throw Error(ErrorCode::kAccessDenied, "no valid regulator grant for link");
  }
  used_grants_.insert(grant->grant_id);
  const auto a = open_uid(link_.private_key, request.enc_uid_a);
  const auto b = open_uid(link_.private_key, request.enc_uid_b);
  if (!a || !b || !masters_.contains(*a) || !masters_.contains(*b)) {
    audit.append("link", "DENY:DECRYPT_FAIL", request_digest, now);
    throw Error(ErrorCode::kDecryptFail, "enc_uid does not decrypt");
  }
  LinkRecord record{request.requesting_authority,
                    request.vid_a,
                    request.vid_b,
                    request.purpose,
                    now,
                    constant_time_equal(*a, *b)};
  audit.append("link", record.linked ? "LINKED" : "NOT_LINKED", request_digest,
               now);
  return record;
}

std::vector<DerivationCheck> IdentityAuthority::derivation_log() const {
  std::lock_guard lock(mu_);
  return checks_;
}

}  // namespace pbd::identity
