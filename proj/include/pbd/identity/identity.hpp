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

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/clock.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/signature.hpp"
#include "pbd/regulator/audit_log.hpp"

namespace pbd::identity {

struct MasterIdentity {
  Digest master_secret{};
  Digest master_id{};  // hash(master_secret)
};

// value = HMAC-SHA256(master_secret, "VID1" framed: org_tag, counter).
struct VirtualIdentity {
  Digest value{};
  std::string org_tag;
  std::uint64_t counter = 0;
};

VirtualIdentity derive_vid(const MasterIdentity& master, std::string_view org_tag,
                           std::uint64_t counter = 0);

// Ed25519 key owned by a vid; seed = HMAC(master_secret, "VSK1" framed:
// org_tag, counter). Only the master holder and the authority can derive it.
crypto::KeyPair derive_vid_signing_key(const MasterIdentity& master,
                                       std::string_view org_tag,
                                       std::uint64_t counter = 0);

// The authority's statement that `public_key` belongs to `vid`. This is what
// the regulator checks back with the authority to authenticate a vid.
struct VidKeyCertificate {
  Digest vid{};
  Bytes public_key;
  Bytes signature;

  Bytes signed_portion() const;
  Bytes serialize() const;  // "VKC1"
  static VidKeyCertificate parse(ByteView data);
  bool operator==(const VidKeyCertificate&) const = default;
};

// Randomised encryption of master_id to the authority's link key. Two calls
// give unrelated ciphertexts.
Bytes encrypt_uid(ByteView authority_link_public_key, const Digest& master_id,
                  Rng& rng);

struct LinkRequest {
  std::string requesting_authority;
  Digest vid_a{};
  Digest vid_b{};
  Bytes enc_uid_a;
  Bytes enc_uid_b;
  std::string purpose;

  Digest digest() const;
};

// Regulator GRANT for one link request. Single use.
struct LinkGrant {
  std::string grant_id;
  std::string purpose;
  Digest request_digest{};
  Bytes signature;  // Ed25519 by the regulator

  Bytes signed_portion() const;
};

struct LinkRecord {
  std::string requesting_authority;
  Digest vid_a{};
  Digest vid_b{};
  std::string purpose;
  Timestamp timestamp = 0;
  bool linked = false;
};

struct DerivationCheck {
  Digest master_id{};
  std::string org_tag;
  std::uint64_t counter = 0;
  bool result = false;
};

class IdentityAuthority {
 public:
  IdentityAuthority(std::string name, Rng rng);

  const std::string& name() const { return name_; }
  const Bytes& signing_public_key() const { return signing_.public_key; }
  const Bytes& link_public_key() const { return link_.public_key; }

  // Regulator key that signs LinkGrants.
  void trust_regulator(Bytes regulator_public_key);

  // Throws Error(kDuplicateEnrollment) if the dedup key was seen before.
  MasterIdentity enroll(std::string_view dedup_key);

  // Throws Error(kUnknownMaster). Logs the check without the vid.
  bool check_derivation(const Digest& vid, const Digest& master_id,
                        std::string_view org_tag, std::uint64_t counter);

  // Certifies the vid's signing key after a derivation check. The authority
  // recomputes the expected key itself; throws Error(kEvidenceRejected) if
  // the vid or key is not the derived one.
  VidKeyCertificate certify_vid_key(const Digest& vid, const Digest& master_id,
                                    std::string_view org_tag,
                                    std::uint64_t counter,
                                    ByteView public_key);

  // Authority leg of the three-way exchange.
  bool authenticate(const VidKeyCertificate& cert) const;

  // Throws Error(kAccessDenied) without a valid unused grant for this exact
  // request, Error(kDecryptFail) if either enc_uid does not decrypt.
  LinkRecord link_identities(const LinkRequest& request,
                             const std::optional<LinkGrant>& grant,
                             regulator::AuditLog& audit, Timestamp now);

  std::vector<DerivationCheck> derivation_log() const;

 private:
  std::string name_;
  mutable std::mutex mu_;
  Rng rng_;
  crypto::KeyPair signing_;
  crypto::BoxKeyPair link_;
  std::optional<Bytes> regulator_key_;
  std::set<Digest> dedup_;
  std::map<Digest, Digest> masters_;  // master_id -> master_secret
  std::set<std::string> used_grants_;
  std::vector<DerivationCheck> checks_;
};

}  // namespace pbd::identity
