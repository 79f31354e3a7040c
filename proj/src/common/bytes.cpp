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
#include "pbd/common/bytes.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include <openssl/crypto.h>

#include "pbd/common/error.hpp"

namespace pbd {

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(ByteView b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

std::string hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (std::uint8_t v : b) {
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xf]);
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view text) {
  if (text.size() % 2 != 0) {
    throw Error(ErrorCode::kMalformed, "odd-length hex string");
  }
  Bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(text[2 * i]);
    const int lo = nibble(text[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::kMalformed, "non-hex character");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

Digest digest_from_hex(std::string_view text) {
  const Bytes raw = from_hex(text);
  if (raw.size() != 32) {
    throw Error(ErrorCode::kMalformed, "expected 32-byte hex digest");
  }
  Digest d;
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

bool contains(ByteView haystack, ByteView needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

void append(Bytes& out, ByteView more) {
  out.insert(out.end(), more.begin(), more.end());
}

void append_u32_be(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void append_u64_be(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

std::uint32_t read_u32_be(ByteView in) {
  if (in.size() < 4) throw Error(ErrorCode::kMalformed, "short u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in[i];
  return v;
}

std::uint64_t read_u64_be(ByteView in) {
  if (in.size() < 8) throw Error(ErrorCode::kMalformed, "short u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

FrameWriter::FrameWriter(std::string_view magic) {
  if (magic.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "frame magic must be 4 bytes");
  }
  append(out_, as_bytes(magic));
}

FrameWriter& FrameWriter::field(ByteView value) {
  if (value.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "frame field too large");
  }
  append_u32_be(out_, static_cast<std::uint32_t>(value.size()));
  append(out_, value);
  return *this;
}

FrameWriter& FrameWriter::field_u64(std::uint64_t value) {
  Bytes tmp;
  append_u64_be(tmp, value);
  return field(tmp);
}

FrameReader::FrameReader(ByteView data, std::string_view magic) : data_(data) {
  if (data.size() < 4 ||
      std::memcmp(data.data(), magic.data(), 4) != 0) {
    throw Error(ErrorCode::kMalformed,
                "bad magic, expected " + std::string(magic));
  }
  pos_ = 4;
}

ByteView FrameReader::field() {
  if (data_.size() - pos_ < 4) {
    throw Error(ErrorCode::kMalformed, "truncated frame length");
  }
  const std::uint32_t len = read_u32_be(data_.subspan(pos_, 4));
  pos_ += 4;
  if (data_.size() - pos_ < len) {
    throw Error(ErrorCode::kMalformed, "truncated frame field");
  }
  ByteView out = data_.subspan(pos_, len);
  pos_ += len;
  return out;
}

std::string FrameReader::field_string() { return to_string(field()); }

Bytes FrameReader::field_bytes() {
  ByteView f = field();
  return Bytes(f.begin(), f.end());
}

std::uint64_t FrameReader::field_u64() {
  ByteView f = field();
  if (f.size() != 8) throw Error(ErrorCode::kMalformed, "u64 field size");
  return read_u64_be(f);
}

Digest FrameReader::field_digest() {
  ByteView f = field();
  if (f.size() != 32) throw Error(ErrorCode::kMalformed, "digest field size");
  Digest d;
  std::copy(f.begin(), f.end(), d.begin());
  return d;
}

void FrameReader::expect_end() const {
  if (!done()) throw Error(ErrorCode::kMalformed, "trailing bytes in frame");
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed: return "MALFORMED";
    case ErrorCode::kMalformedKey: return "MALFORMED_KEY";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kInternal: return "INTERNAL";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kConfig: return "CONFIG";
    case ErrorCode::kKeyMismatch: return "KEY_MISMATCH";
    case ErrorCode::kTypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::kSignatureInvalid: return "SIGNATURE_INVALID";
    case ErrorCode::kDuplicateEnrollment: return "DUPLICATE_ENROLLMENT";
    case ErrorCode::kUnknownMaster: return "UNKNOWN_MASTER";
    case ErrorCode::kEvidenceRejected: return "EVIDENCE_REJECTED";
    case ErrorCode::kDecryptFail: return "DECRYPT_FAIL";
    case ErrorCode::kAccessDenied: return "ACCESS_DENIED";
    case ErrorCode::kTypeViolation: return "TYPE_VIOLATION";
    case ErrorCode::kStructuralReject: return "STRUCTURAL_REJECT";
    case ErrorCode::kBadDoctorSignature: return "BAD_DOCTOR_SIGNATURE";
    case ErrorCode::kBadPaymentFile: return "BAD_PAYMENT_FILE";
  }
  return "UNKNOWN";
}

}  // namespace pbd
