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
#include "pbd/crypto/type_id.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "pbd/common/error.hpp"

namespace pbd::crypto {
namespace {

bool valid_utf8(std::string_view s) {
  std::int32_t i = 0;
  const auto len = static_cast<std::int32_t>(s.size());
  while (i < len) {
    UChar32 c = 0;
    U8_NEXT(reinterpret_cast<const std::uint8_t*>(s.data()), i, len, c);
    if (c < 0) return false;
  }
  return true;
}

void check_part(std::string_view part, const char* what) {
  if (part.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("empty ") + what);
  }
  for (char c : part) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7f || c == '(' || c == ')') {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("illegal character in ") + what);
    }
  }
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
          (c >= '0' && c <= '9') || c == '_')) {
      return false;
    }
  }
  return true;
}

struct Split {
  std::string_view name;
  std::optional<std::string_view> param;
};

Split split_type(std::string_view text) {
  const std::size_t open = text.find('(');
  if (open == std::string_view::npos) {
    if (text.find(')') != std::string_view::npos) {
      throw Error(ErrorCode::kMalformed, "unbalanced ')' in type");
    }
    return {text, std::nullopt};
  }
  if (text.empty() || text.back() != ')' || open == 0) {
    throw Error(ErrorCode::kMalformed, "expected Name(param)");
  }
  return {text.substr(0, open), text.substr(open + 1, text.size() - open - 2)};
}

}  // namespace

std::string nfc(std::string_view utf8) {
  if (!valid_utf8(utf8)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid UTF-8");
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInternal, "ICU NFC unavailable");
  const icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
  const icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInternal, "NFC failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

TypeId::TypeId(std::string_view name,
               std::optional<std::string_view> subject_parameter) {
  check_part(name, "type name");
  name_ = nfc(name);
  if (subject_parameter) {
    check_part(*subject_parameter, "subject parameter");
    subject_parameter_ = nfc(*subject_parameter);
  }
}

TypeId TypeId::parse(std::string_view text) {
  const Split s = split_type(text);
  try {
    return TypeId(s.name, s.param);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformed, e.detail());
  }
}

std::string TypeId::canonical() const {
  if (!subject_parameter_) return name_;
  return name_ + "(" + *subject_parameter_ + ")";
}

TypePattern TypePattern::parse(std::string_view text) {
  const Split s = split_type(text);
  TypePattern p;
  try {
    check_part(s.name, "pattern name");
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformed, e.detail());
  }
  const std::size_t star = s.name.find('*');
  if (star != std::string_view::npos && star != s.name.size() - 1) {
    throw Error(ErrorCode::kMalformed, "'*' only allowed as a suffix");
  }
  p.name_ = nfc(s.name);
  if (s.param) {
    if (!is_identifier(*s.param)) {
      throw Error(ErrorCode::kMalformed, "pattern variable must be identifier");
    }
    p.variable_ = std::string(*s.param);
  }
  return p;
}

bool TypePattern::matches(const TypeId& type) const {
  if (!name_.empty() && name_.back() == '*') {
    const std::string_view prefix(name_.data(), name_.size() - 1);
    return type.name().compare(0, prefix.size(), prefix) == 0;
  }
  return type.name() == name_;
}

std::string TypePattern::canonical() const {
  if (!variable_) return name_;
  return name_ + "(" + *variable_ + ")";
}

}  // namespace pbd::crypto
