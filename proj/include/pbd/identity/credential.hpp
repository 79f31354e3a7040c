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
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/rng.hpp"
#include "pbd/crypto/blind_rsa.hpp"

namespace pbd::identity {

// An issuer's RSA-FDH signature on ("CRM1" framed: subject_vid, attribute,
// issuer). Each attribute has its own issuer key, so a blind signer commits
// to the attribute without seeing the message.
struct Credential {
  Digest subject_vid{};
  std::string attribute;
  std::string issuer;
  Bytes signature;

  Bytes message() const;
  // "CRD1" framed: subject_vid, attribute, issuer, signature.
  Bytes serialize() const;
  // Throws Error(kMalformed).
  static Credential parse(ByteView data);
  bool operator==(const Credential&) const = default;
};

Bytes credential_message(const Digest& subject_vid, std::string_view attribute,
                         std::string_view issuer);

bool verify_credential(const Credential& credential,
                       const crypto::RsaPublicKey& issuer_key);

// What the issuer keeps from a blind issuance. Nothing here is a function of
// the destination vid.
struct IssuerTranscriptRow {
  Digest known_vid{};
  std::string attribute;
  Bytes blinded_value;
  Bytes blinded_signature;
};

class CredentialIssuer {
 public:
  // `key_bits` applies to every attribute key generated later.
  CredentialIssuer(std::string name, Rng rng, int key_bits = 2048);

  const std::string& name() const { return name_; }

  // Generates the attribute's key on first use.
  const crypto::RsaPublicKey& public_key(std::string_view attribute);

  // The issuer's own records: subjects it knows under `known_vid` to hold
  // `attribute`.
  void record_evidence(std::string_view attribute, const Digest& known_vid);

  // Throws Error(kEvidenceRejected).
  Credential issue_plain(const Digest& subject_vid, std::string_view attribute);
  Bytes issue_blinded(const Digest& known_vid, std::string_view attribute,
                      ByteView blinded_value);

  std::vector<IssuerTranscriptRow> transcript() const;

 private:
  const crypto::RsaPrivateKey& key_for(std::string_view attribute);
  void require_evidence(std::string_view attribute, const Digest& vid) const;

  std::string name_;
  int key_bits_;
  mutable std::mutex mu_;
  Rng rng_;
  std::map<std::string, crypto::RsaPrivateKey, std::less<>> keys_;
  std::map<std::string, std::set<Digest>, std::less<>> evidence_;
  std::vector<IssuerTranscriptRow> transcript_;
};

// Holder side of blind issuance onto `destination_vid`.
struct BlindIssuance {
  Credential pending;  // signature empty until finished
  crypto::BlindedMessage blinded;
};

BlindIssuance begin_blind_issuance(const Digest& destination_vid,
                                   std::string_view attribute,
                                   std::string_view issuer,
                                   const crypto::RsaPublicKey& issuer_key,
                                   Rng& rng);

// Throws Error(kSignatureInvalid) if the unblinded signature does not verify.
Credential finish_blind_issuance(const BlindIssuance& state,
                                 ByteView blinded_signature,
                                 const crypto::RsaPublicKey& issuer_key);

}  // namespace pbd::identity
