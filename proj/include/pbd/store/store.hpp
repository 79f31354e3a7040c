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
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/envelope.hpp"
#include "pbd/crypto/type_id.hpp"

namespace pbd::store {

using IndexToken = Digest;

// An envelope as handed back to a TE, with the producer key it was stored
// under.
struct StoredEnvelope {
  std::uint64_t seq = 0;
  crypto::Envelope envelope;
  Bytes producer_public_key;
};

// Operator-visible form of a record. `sealed` is the envelope and producer
// key under the storage key; the subject vid never appears in the clear.
struct EncryptedRecord {
  IndexToken index_token{};
  std::uint64_t seq = 0;
  Bytes sealed;
};

struct StoreAccess {
  Digest te_measurement{};
  IndexToken index_token{};
  std::size_t returned = 0;
};

// PRF(index_key, subject ‖ type). Deterministic per (subject, type).
IndexToken index_token(const Digest& index_key, const crypto::SubjectTag& subject,
                       const crypto::TypeId& type);

// Append-only encrypted record store. With a path, every put is appended to
// the file ("STO1" header, then length-prefixed records) before it returns,
// and the constructor replays an existing file to rebuild the index.
// Single writer, concurrent readers; seq defines the total order.
class EncryptedStore {
 public:
  // Throws Error(kMalformed) for a corrupt or truncated file and
  // Error(kKeyMismatch) if a record does not open under `storage_key`.
  EncryptedStore(Digest index_key, crypto::AeadKey storage_key,
                 std::optional<std::filesystem::path> path = std::nullopt);

  std::uint64_t put(const crypto::Envelope& envelope,
                    ByteView producer_public_key);

  // All envelopes under (subject, type) in insertion order. Handing out
  // envelopes releases no plaintext; opening still needs a GRANT.
  std::vector<StoredEnvelope> get(const crypto::SubjectTag& subject,
                                  const crypto::TypeId& type,
                                  const Digest& requesting_te);
  std::vector<StoredEnvelope> get_by_token(const IndexToken& token) const;

  std::size_t size() const;
  std::vector<EncryptedRecord> records() const;
  std::vector<StoreAccess> access_log() const;

 private:
  StoredEnvelope decrypt(const EncryptedRecord& record) const;
  void index_locked(EncryptedRecord record);

  Digest index_key_;
  crypto::AeadKey storage_key_;
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::vector<EncryptedRecord> records_;
  std::map<IndexToken, std::vector<std::size_t>> index_;
  std::vector<StoreAccess> accesses_;
};

}  // namespace pbd::store
