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
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbd/common/bytes.hpp"
#include "pbd/common/clock.hpp"

namespace pbd::regulator {

// One link of the hash chain.
//
//   entry_hash = H("AUD1" framed: seq, ts, event, detail, payload_digest,
//                  prev_hash)
//
// `event` is a short kind (approval, consent, access, link, ...). `detail` is
// a printable token without whitespace, e.g. "GRANT:d-12" or
// "DENY:NO_RULE". Payloads are only ever stored as digests.
struct AuditEntry {
  std::uint64_t seq = 0;
  Timestamp timestamp = 0;
  std::string event;
  std::string detail;
  Digest payload_digest{};
  Digest prev_hash{};
  Digest entry_hash{};

  Digest compute_hash() const;
  bool operator==(const AuditEntry&) const = default;
};

struct AuditVerdict {
  bool ok = true;
  // Index of the first entry that fails to verify; for truncation, the
  // index where the missing tail starts.
  std::optional<std::uint64_t> first_bad;
  std::string reason;
};

// True iff sequence numbers are contiguous from 0, every prev_hash equals
// the predecessor's entry_hash (zero for entry 0), and every entry_hash
// recomputes.
AuditVerdict verify_audit(std::span<const AuditEntry> entries);

// Text form. First line `AUDIT1 count=<n> head=<hex>` pins the length and
// last hash so tail truncation is detectable; then one entry per line:
//   seq ts event detail payload_digest prev_hash entry_hash
std::string serialize_audit(std::span<const AuditEntry> entries);
// Never throws on tampered input; malformed lines become the first-bad index.
AuditVerdict verify_audit_text(std::string_view text);
// Throws Error(kMalformed).
std::vector<AuditEntry> parse_audit(std::string_view text);

// Append-only, internally serialised.
class AuditLog {
 public:
  AuditLog() = default;
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  // Throws Error(kInvalidArgument) if event or detail is empty or contains
  // whitespace.
  AuditEntry append(std::string_view event, std::string_view detail,
                    ByteView payload, Timestamp now);

  std::vector<AuditEntry> entries() const;
  std::size_t size() const;
  AuditVerdict verify() const;
  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  mutable std::mutex mu_;
  std::vector<AuditEntry> entries_;
};

}  // namespace pbd::regulator
