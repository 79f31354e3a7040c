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
#include <string>

#include "doctest.h"
#include "pbd/common/kv.hpp"
#include "pbd/regulator/audit_log.hpp"
#include "support/oracles.hpp"

using namespace pbd;
using namespace pbd::regulator;

namespace {

void fill(AuditLog& log, int n) {
  for (int i = 0; i < n; ++i) {
    log.append(i % 2 ? "access" : "consent", "GRANT:d-" + std::to_string(i),
               as_bytes("payload " + std::to_string(i)), 1000 + i);
  }
}

std::vector<std::string> text_lines(const std::string& text) {
  std::vector<std::string> out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace

TEST_CASE("fresh log of 100 entries verifies") {
  AuditLog log;
  fill(log, 100);
  CHECK(log.verify().ok);
  CHECK(verify_audit_text(log.serialize()).ok);
  CHECK(parse_audit(log.serialize()) == log.entries());
  AuditLog empty;
  CHECK(verify_audit_text(empty.serialize()).ok);
}

TEST_CASE("mutating entry 50 payload digest is caught at 50") {
  AuditLog log;
  fill(log, 100);
  auto entries = log.entries();
  entries[50].payload_digest[0] ^= 1;
  const AuditVerdict v = verify_audit(entries);
  CHECK_FALSE(v.ok);
  CHECK(v.first_bad == 50u);
}

TEST_CASE("deleting entry 50 is caught as a gap at 50") {
  AuditLog log;
  fill(log, 100);
  auto entries = log.entries();
  entries.erase(entries.begin() + 50);
  const AuditVerdict v = verify_audit(entries);
  CHECK_FALSE(v.ok);
  CHECK(v.first_bad == 50u);
}

TEST_CASE("truncation is reported at the truncation point") {
  AuditLog log;
  fill(log, 20);
  auto lines = text_lines(log.serialize());
  for (std::size_t keep = 0; keep < 20; ++keep) {
    std::vector<std::string> cut(lines.begin(), lines.begin() + 1 + keep);
    const AuditVerdict v = verify_audit_text(join_lines(cut));
    CHECK_FALSE(v.ok);
    CHECK(v.first_bad == keep);
  }
}

TEST_CASE("recomputing a mutated hash still breaks the next link") {
  AuditLog log;
  fill(log, 10);
  auto entries = log.entries();
  entries[4].detail = "GRANT:forged";
  entries[4].entry_hash = entries[4].compute_hash();
  const AuditVerdict v = verify_audit(entries);
  CHECK_FALSE(v.ok);
  CHECK(v.first_bad == 5u);
}

TEST_CASE("every single character flip in the text form is detected") {
  AuditLog log;
  fill(log, 8);
  const auto lines = text_lines(log.serialize());
  int detected = 0;
  int total = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    for (std::size_t ci = 0; ci < lines[li].size(); ci += 7) {
      auto mutated = lines;
      char& c = mutated[li][ci];
      c = (c == 'a') ? 'b' : (c == '0' ? '1' : 'a');
      const AuditVerdict v = verify_audit_text(join_lines(mutated));
      ++total;
      if (!v.ok && v.first_bad == li - 1) ++detected;
    }
  }
  CHECK(detected == total);
}

TEST_CASE("append rejects whitespace in event or detail") {
  AuditLog log;
  CHECK(pbd::testing::error_code_of([&] {
          log.append("access", "has space", {}, 0);
        }) == ErrorCode::kInvalidArgument);
  CHECK(pbd::testing::error_code_of([&] { log.append("", "x", {}, 0); }) ==
        ErrorCode::kInvalidArgument);
}
