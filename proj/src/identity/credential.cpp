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
#include "pbd/identity/credential.hpp"

#include "pbd/common/error.hpp"

namespace pbd::identity {

Bytes credential_message(const Digest& subject_vid, std::string_view attribute,
                         std::string_view issuer) {
  return FrameWriter("CRM1")
      .field(subject_vid)
      .field(attribute)
      .field(issuer)
      .finish();
}

Bytes Credential::message() const {
  return credential_message(subject_vid, attribute, issuer);
}

Bytes Credential::serialize() const {
  return FrameWriter("CRD1")
      .field(subject_vid)
      .field(attribute)
      .field(issuer)
      .field(signature)
      .finish();
}

Credential Credential::parse(ByteView data) {
  FrameReader r(data, "CRD1");
  Credential c;
  c.subject_vid = r.field_digest();
  c.attribute = r.field_string();
  c.issuer = r.field_string();
  c.signature = r.field_bytes();
  r.expect_end();
  return c;
}

bool verify_credential(const Credential& credential,
                       const crypto::RsaPublicKey& issuer_key) {
  return crypto::rsa_fdh_verify(issuer_key, credential.message(),
                                credential.signature);
}

CredentialIssuer::CredentialIssuer(std::string name, Rng rng, int key_bits)
    : name_(std::move(name)), key_bits_(key_bits), rng_(std::move(rng)) {}

const crypto::RsaPrivateKey& CredentialIssuer::key_for(
    std::string_view attribute) {
  auto it = keys_.find(attribute);
  if (it == keys_.end()) {
    Rng key_rng = rng_.fork(attribute);
    it = keys_
             .emplace(std::string(attribute),
                      crypto::RsaPrivateKey::generate(key_rng, key_bits_))
             .first;
  }
  return it->second;
}

const crypto::RsaPublicKey& CredentialIssuer::public_key(
    std::string_view attribute) {
  std::lock_guard lock(mu_);
  return key_for(attribute).public_key();
}

void CredentialIssuer::record_evidence(std::string_view attribute,
                                       const Digest& known_vid) {
  std::lock_guard lock(mu_);
  evidence_[std::string(attribute)].insert(known_vid);
}

void CredentialIssuer::require_evidence(std::string_view attribute,
                                        const Digest& vid) const {
  auto it = evidence_.find(attribute);
  if (it == evidence_.end() || !it->second.contains(vid)) {
    throw Error(ErrorCode::kEvidenceRejected,
                "no record of subject for " + std::string(attribute));
  }
}

Credential CredentialIssuer::issue_plain(const Digest& subject_vid,
                                         std::string_view attribute) {
  std::lock_guard lock(mu_);
  require_evidence(attribute, subject_vid);
  Credential c{subject_vid, std::string(attribute), name_, {}};
  c.signature = crypto::rsa_fdh_sign(key_for(attribute), c.message());
  return c;
}

Bytes CredentialIssuer::issue_blinded(const Digest& known_vid,
                                      std::string_view attribute,
                                      ByteView blinded_value) {
  std::lock_guard lock(mu_);
  require_evidence(attribute, known_vid);
  Bytes sig = crypto::sign_blinded(key_for(attribute), blinded_value);
  transcript_.push_back(
      {known_vid, std::string(attribute), to_bytes(blinded_value), sig});
  return sig;
}

std::vector<IssuerTranscriptRow> CredentialIssuer::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

BlindIssuance begin_blind_issuance(const Digest& destination_vid,
                                   std::string_view attribute,
                                   std::string_view issuer,
                                   const crypto::RsaPublicKey& issuer_key,
                                   Rng& rng) {
  Credential pending{destination_vid, std::string(attribute),
                     std::string(issuer), {}};
  crypto::BlindedMessage blinded =
      crypto::blind(pending.message(), issuer_key, rng);
  return BlindIssuance{std::move(pending), std::move(blinded)};
}

Credential finish_blind_issuance(const BlindIssuance& state,
                                 ByteView blinded_signature,
                                 const crypto::RsaPublicKey& issuer_key) {
  Credential c = state.pending;
  c.signature = crypto::unblind(blinded_signature,
                                state.blinded.blinding_factor, issuer_key);
  if (!verify_credential(c, issuer_key)) {
    throw Error(ErrorCode::kSignatureInvalid, "unblinded credential");
  }
  return c;
}

}  // namespace pbd::identity
