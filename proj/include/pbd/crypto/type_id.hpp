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

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace pbd::crypto {

// A named data type, optionally parametrised by a subject tag, written
// `Name` or `Name(param)`. Names are NFC-normalised and case-sensitive.
// The canonical string is what gets bound into envelope associated data.
class TypeId {
 public:
  // Throws Error(kInvalidArgument) for empty names, parentheses or control
  // characters in either part, or invalid UTF-8.
  explicit TypeId(std::string_view name,
                  std::optional<std::string_view> subject_parameter = {});

  // Throws Error(kMalformed).
  static TypeId parse(std::string_view text);

  const std::string& name() const { return name_; }
  const std::optional<std::string>& subject_parameter() const {
    return subject_parameter_;
  }

  std::string canonical() const;

  auto operator<=>(const TypeId&) const = default;

 private:
  std::string name_;
  std::optional<std::string> subject_parameter_;
};

// NFC normalisation; throws Error(kInvalidArgument) on invalid UTF-8.
std::string nfc(std::string_view utf8);

// Pattern over TypeIds used by manifests and rules: `DT4/MedicalRecord(x)`.
// The name may end in `*` (prefix match). The parameter, when present, names
// a variable that binds to the envelope's subject.
class TypePattern {
 public:
  static TypePattern parse(std::string_view text);

  bool matches(const TypeId& type) const;

  const std::string& name() const { return name_; }
  const std::optional<std::string>& variable() const { return variable_; }
  std::string canonical() const;

  bool operator==(const TypePattern&) const = default;

 private:
  std::string name_;
  std::optional<std::string> variable_;
};

}  // namespace pbd::crypto
