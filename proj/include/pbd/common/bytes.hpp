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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pbd {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Bytes to_bytes(std::string_view s);
inline Bytes to_bytes(ByteView b) { return Bytes(b.begin(), b.end()); }
std::string to_string(ByteView b);

std::string hex(ByteView b);
// Throws Error(kMalformed) on odd length or non-hex characters.
Bytes from_hex(std::string_view text);
Digest digest_from_hex(std::string_view text);

// Naive substring search; used by leak scans.
bool contains(ByteView haystack, ByteView needle);

bool constant_time_equal(ByteView a, ByteView b);

void append(Bytes& out, ByteView more);
void append_u32_be(Bytes& out, std::uint32_t v);
void append_u64_be(Bytes& out, std::uint64_t v);
std::uint32_t read_u32_be(ByteView in);
std::uint64_t read_u64_be(ByteView in);

// Length-prefixed framing shared by every wire format in the project:
// a 4-byte magic, then fields each preceded by a 4-byte big-endian length.
class FrameWriter {
 public:
  explicit FrameWriter(std::string_view magic);

  FrameWriter& field(ByteView value);
  FrameWriter& field(std::string_view value) { return field(as_bytes(value)); }
  FrameWriter& field_u64(std::uint64_t value);
  FrameWriter& field_i64(std::int64_t value) {
    return field_u64(static_cast<std::uint64_t>(value));
  }

  const Bytes& bytes() const { return out_; }
  Bytes finish() const { return out_; }

 private:
  Bytes out_;
};

class FrameReader {
 public:
  // Throws Error(kMalformed) if the magic does not match.
  FrameReader(ByteView data, std::string_view magic);

  ByteView field();
  std::string field_string();
  Bytes field_bytes();
  std::uint64_t field_u64();
  std::int64_t field_i64() { return static_cast<std::int64_t>(field_u64()); }
  Digest field_digest();

  bool done() const { return pos_ == data_.size(); }
  // Throws if trailing bytes remain.
  void expect_end() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace pbd
