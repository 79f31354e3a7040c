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
#include "pbd/store/store.hpp"

#include <fstream>
#include <iterator>
#include <mutex>

#include "pbd/common/error.hpp"
#include "pbd/crypto/hash.hpp"

namespace pbd::store {
namespace {

constexpr std::string_view kFileMagic = "STO1";
constexpr std::string_view kRecordMagic = "STR1";
constexpr std::string_view kSealedMagic = "SEV1";
constexpr std::string_view kTokenMagic = "TOK1";
constexpr std::string_view kNonceMagic = "SNC1";

Bytes record_aad(const IndexToken& token, std::uint64_t seq) {
  Bytes aad(token.begin(), token.end());
  append_u64_be(aad, seq);
  return aad;
}

// Unique per seq under one key, so no nonce is ever reused by this store.
crypto::AeadNonce record_nonce(const crypto::AeadKey& key, std::uint64_t seq) {
  const Digest d = crypto::prf(key, FrameWriter(kNonceMagic).field_u64(seq).finish());
  crypto::AeadNonce n;
  std::copy_n(d.begin(), n.size(), n.begin());
  return n;
}

Bytes encode_record(const EncryptedRecord& r) {
  return FrameWriter(kRecordMagic)
      .field(r.index_token)
      .field_u64(r.seq)
      .field(r.sealed)
      .finish();
}

EncryptedRecord decode_record(ByteView data) {
  FrameReader in(data, kRecordMagic);
  EncryptedRecord r;
  r.index_token = in.field_digest();
  r.seq = in.field_u64();
  r.sealed = in.field_bytes();
  in.expect_end();
  return r;
}

}  // namespace

IndexToken index_token(const Digest& index_key, const crypto::SubjectTag& subject,
                       const crypto::TypeId& type) {
  return crypto::prf(index_key, FrameWriter(kTokenMagic)
                                    .field(crypto::subject_bytes(subject))
                                    .field(type.canonical())
                                    .finish());
}

EncryptedStore::EncryptedStore(Digest index_key, crypto::AeadKey storage_key,
                               std::optional<std::filesystem::path> path)
    : index_key_(index_key), storage_key_(storage_key), path_(std::move(path)) {
  if (!path_) return;
  if (!std::filesystem::exists(*path_)) {
    std::ofstream out(*path_, std::ios::binary);
    out.write(kFileMagic.data(), static_cast<std::streamsize>(kFileMagic.size()));
    if (!out) throw Error(ErrorCode::kIo, "cannot create " + path_->string());
    return;
  }
  std::ifstream in(*path_, std::ios::binary);
  const Bytes data(std::istreambuf_iterator<char>(in), {});
  if (data.size() < kFileMagic.size() ||
      !std::equal(kFileMagic.begin(), kFileMagic.end(), data.begin())) {
    throw Error(ErrorCode::kMalformed, "not a store file");
  }
  std::size_t pos = kFileMagic.size();
  while (pos < data.size()) {
    if (data.size() - pos < 4) throw Error(ErrorCode::kMalformed, "truncated length");
    const std::uint32_t len = read_u32_be(ByteView(data).subspan(pos, 4));
    pos += 4;
    if (data.size() - pos < len) throw Error(ErrorCode::kMalformed, "truncated record");
    EncryptedRecord r = decode_record(ByteView(data).subspan(pos, len));
    pos += len;
    if (r.seq != records_.size()) {
      throw Error(ErrorCode::kMalformed, "record out of sequence");
    }
    decrypt(r);  // authenticates token and seq
    index_locked(std::move(r));
  }
}

void EncryptedStore::index_locked(EncryptedRecord record) {
  index_[record.index_token].push_back(records_.size());
  records_.push_back(std::move(record));
}

std::uint64_t EncryptedStore::put(const crypto::Envelope& envelope,
                                  ByteView producer_public_key) {
  const IndexToken token = index_token(index_key_, envelope.subject, envelope.type_id);
  const Bytes plain = FrameWriter(kSealedMagic)
                          .field(envelope.serialize())
                          .field(producer_public_key)
                          .finish();
  std::unique_lock lock(mu_);
  const std::uint64_t seq = records_.size();
  EncryptedRecord r{token, seq,
                    crypto::aead_seal(storage_key_, record_nonce(storage_key_, seq),
                                      plain, record_aad(token, seq))};
  if (path_) {
    const Bytes frame = encode_record(r);
    Bytes out;
    append_u32_be(out, static_cast<std::uint32_t>(frame.size()));
    append(out, frame);
    std::ofstream file(*path_, std::ios::binary | std::ios::app);
    file.write(reinterpret_cast<const char*>(out.data()),
               static_cast<std::streamsize>(out.size()));
    file.flush();
    if (!file) throw Error(ErrorCode::kIo, "append to " + path_->string());
  }
  index_locked(std::move(r));
  return seq;
}

StoredEnvelope EncryptedStore::decrypt(const EncryptedRecord& r) const {
  auto plain = crypto::aead_open(storage_key_, record_nonce(storage_key_, r.seq),
                                 r.sealed, record_aad(r.index_token, r.seq));
  if (!plain) throw Error(ErrorCode::kKeyMismatch, "record does not open");
  FrameReader in(*plain, kSealedMagic);
  crypto::Envelope envelope = crypto::Envelope::parse(in.field());
  Bytes producer = in.field_bytes();
  in.expect_end();
  return {r.seq, std::move(envelope), std::move(producer)};
}

std::vector<StoredEnvelope> EncryptedStore::get_by_token(
    const IndexToken& token) const {
  std::shared_lock lock(mu_);
  std::vector<StoredEnvelope> out;
  auto it = index_.find(token);
  if (it == index_.end()) return out;
  for (std::size_t i : it->second) out.push_back(decrypt(records_[i]));
  return out;
}

std::vector<StoredEnvelope> EncryptedStore::get(const crypto::SubjectTag& subject,
                                                const crypto::TypeId& type,
                                                const Digest& requesting_te) {
  const IndexToken token = index_token(index_key_, subject, type);
  std::vector<StoredEnvelope> out = get_by_token(token);
  std::unique_lock lock(mu_);
  accesses_.push_back({requesting_te, token, out.size()});
  return out;
}

std::size_t EncryptedStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::vector<EncryptedRecord> EncryptedStore::records() const {
  std::shared_lock lock(mu_);
  return records_;
}

std::vector<StoreAccess> EncryptedStore::access_log() const {
  std::shared_lock lock(mu_);
  return accesses_;
}

}  // namespace pbd::store
