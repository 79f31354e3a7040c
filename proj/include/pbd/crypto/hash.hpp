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

#include <cstddef>

#include "pbd/common/bytes.hpp"

namespace pbd::crypto {

// SHA-256.
Digest hash(ByteView message);
inline Digest hash(std::string_view message) { return hash(as_bytes(message)); }

// HMAC-SHA256; the keyed PRF used for virtual identities and store tokens.
Digest prf(ByteView key, ByteView message);

// RFC 5869 HKDF-SHA256.
Bytes hkdf(ByteView ikm, ByteView salt, ByteView info, std::size_t length);

}  // namespace pbd::crypto
