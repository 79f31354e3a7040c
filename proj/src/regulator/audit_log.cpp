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
#include "pbd/regulator/audit_log.hpp"

#include <charconv>

#include "pbd/common/error.hpp"
#include "pbd/common/kv.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::regulator {
namespace {

constexpr std::string_view kHeaderTag = "AUDIT1";

bool printable_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u >= 0x7f) return false;
  }
  return true;
}

std::string entry_line(const AuditEntry& e) {
  return std::to_string(e.seq) + " " + std::to_string(e.timestamp) + " " +
         e.event + " " + e.detail + " " + hex(e.payload_digest) + " " +
         hex(e.prev_hash) + " " + hex(e.entry_hash);
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<Digest> parse_digest(std::string_view s) {
  try {
    return digest_from_hex(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<AuditEntry> parse_line(std::string_view line) {
  const std::vector<std::string> f = split(line, ' ');
  if (f.size() != 7) return std::nullopt;
  AuditEntry e;
  auto seq = parse_number<std::uint64_t>(f[0]);
  auto ts = parse_number<Timestamp>(f[1]);
  auto pd = parse_digest(f[4]);
  auto ph = parse_digest(f[5]);
  auto eh = parse_digest(f[6]);
  if (!seq || !ts || !pd || !ph || !eh || !printable_token(f[2]) ||
      !printable_token(f[3])) {
    return std::nullopt;
  }
  e.seq = *seq;
  e.timestamp = *ts;
  e.event = f[2];
  e.detail = f[3];
  e.payload_digest = *pd;
  e.prev_hash = *ph;
  e.entry_hash = *eh;
  return e;
}

struct Header {
  std::uint64_t count = 0;
  Digest head{};
};

std::optional<Header> parse_header(std::string_view line) {
  const std::vector<std::string> f = split(line, ' ');
  if (f.size() != 3 || f[0] != kHeaderTag) return std::nullopt;
  if (f[1].rfind("count=", 0) != 0 || f[2].rfind("head=", 0) != 0) {
    return std::nullopt;
  }
  auto count = parse_number<std::uint64_t>(std::string_view(f[1]).substr(6));
  auto head = parse_digest(std::string_view(f[2]).substr(5));
  if (!count || !head) return std::nullopt;
  return Header{*count, *head};
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

AuditVerdict bad(std::uint64_t index, std::string reason) {
  return AuditVerdict{false, index, std::move(reason)};
}

}  // namespace

Digest AuditEntry::compute_hash() const {
  return crypto::hash(FrameWriter("AUD1")
                          .field_u64(seq)
                          .field_i64(timestamp)
                          .field(event)
                          .field(detail)
                          .field(payload_digest)
                          .field(prev_hash)
                          .finish());
}

AuditVerdict verify_audit(std::span<const AuditEntry> entries) {
  Digest prev{};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const AuditEntry& e = entries[i];
    if (e.seq != i) return bad(i, "sequence gap");
    if (e.prev_hash != prev) return bad(i, "prev_hash mismatch");
    if (e.compute_hash() != e.entry_hash) return bad(i, "entry_hash mismatch");
    prev = e.entry_hash;
  }
  return {};
}

std::string serialize_audit(std::span<const AuditEntry> entries) {
  const Digest head = entries.empty() ? Digest{} : entries.back().entry_hash;
  std::string out = std::string(kHeaderTag) +
                    " count=" + std::to_string(entries.size()) +
                    " head=" + hex(head) + "\n";
  for (const AuditEntry& e : entries) out += entry_line(e) + "\n";
  return out;
}

AuditVerdict verify_audit_text(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) return bad(0, "missing header");
  const auto header = parse_header(lines[0]);
  if (!header) return bad(0, "malformed header");

  std::vector<AuditEntry> entries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto e = parse_line(lines[i]);
    if (!e) return bad(i - 1, "malformed entry");
    entries.push_back(std::move(*e));
  }
  AuditVerdict chain = verify_audit(entries);
  if (!chain.ok) return chain;
  if (entries.size() < header->count) return bad(entries.size(), "truncated");
  if (entries.size() > header->count) return bad(header->count, "extra entries");
  const Digest head = entries.empty() ? Digest{} : entries.back().entry_hash;
  if (head != header->head) {
    return bad(entries.empty() ? 0 : entries.size() - 1, "head mismatch");
  }
  return {};
}

std::vector<AuditEntry> parse_audit(std::string_view text) {
  const AuditVerdict v = verify_audit_text(text);
  if (!v.ok) {
    throw Error(ErrorCode::kMalformed,
                "audit log bad at entry " + std::to_string(*v.first_bad) +
                    ": " + v.reason);
  }
  std::vector<AuditEntry> entries;
  const auto lines = lines_of(text);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    entries.push_back(*parse_line(lines[i]));
  }
  return entries;
}

AuditEntry AuditLog::append(std::string_view event, std::string_view detail,
                            ByteView payload, Timestamp now) {
  if (!printable_token(event) || !printable_token(detail)) {
    throw Error(ErrorCode::kInvalidArgument,
                "audit event/detail must be non-empty without whitespace");
  }
  std::lock_guard lock(mu_);
  AuditEntry e;
  e.seq = entries_.size();
  e.timestamp = now;
  e.event = std::string(event);
  e.detail = std::string(detail);
  e.payload_digest = crypto::hash(payload);
  e.prev_hash = entries_.empty() ? Digest{} : entries_.back().entry_hash;
  e.entry_hash = e.compute_hash();
  entries_.push_back(e);
  return e;
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

AuditVerdict AuditLog::verify() const {
  std::lock_guard lock(mu_);
  return verify_audit(entries_);
}

std::string AuditLog::serialize() const {
  std::lock_guard lock(mu_);
  return serialize_audit(entries_);
}

void AuditLog::save(const std::string& path) const {
  write_file(path, serialize());
}

}  // namespace pbd::regulator
