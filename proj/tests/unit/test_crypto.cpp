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
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "doctest.h"
#include "pbd/crypto/blind_rsa.hpp"
#include "pbd/crypto/box.hpp"
#include "pbd/crypto/envelope.hpp"
#include "pbd/crypto/hash.hpp"
#include "pbd/crypto/signature.hpp"
#include "pbd/crypto/type_id.hpp"
#include "support/oracles.hpp"

using namespace pbd;
using namespace pbd::crypto;
using pbd::testing::error_code_of;

namespace {

using BigInt = boost::multiprecision::cpp_int;

BigInt to_big(ByteView b) {
  BigInt v;
  boost::multiprecision::import_bits(v, b.begin(), b.end(), 8, true);
  return v;
}

struct OracleKey {
  BigInt n;
  BigInt e;
};

// Decodes the RPK1 frame without touching OpenSSL.
OracleKey oracle_key(const RsaPublicKey& pk) {
  const Bytes ser = pk.serialize();
  FrameReader r(ser, "RPK1");
  OracleKey k;
  k.n = to_big(r.field());
  k.e = to_big(r.field());
  return k;
}

// Independent FDH: same expansion, reduction done in cpp_int.
BigInt oracle_fdh(const RsaPublicKey& pk, std::string_view m) {
  const OracleKey k = oracle_key(pk);
  const std::size_t width = pk.modulus_bytes();
  const Digest fp = pk.fingerprint();
  Bytes expanded;
  for (std::uint32_t ctr = 0; expanded.size() < width + 16; ++ctr) {
    Bytes block = to_bytes("pbd-fdh-v1");
    block.insert(block.end(), fp.begin(), fp.end());
    append_u32_be(block, ctr);
    block.insert(block.end(), m.begin(), m.end());
    const Digest d = hash(block);
    expanded.insert(expanded.end(), d.begin(), d.end());
  }
  expanded.resize(width + 16);
  return to_big(expanded) % k.n;
}

const RsaPrivateKey& shared_rsa_key() {
  static Rng rng(2024);
  static RsaPrivateKey key = RsaPrivateKey::generate(rng, 2048);
  return key;
}

}  // namespace

TEST_CASE("sha256 of the empty string matches the published vector") {
  CHECK(hex(hash(Bytes{})) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hex(hash(std::string_view("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hmac-sha256 matches the RFC 4231 case 2 vector") {
  CHECK(hex(prf(as_bytes("Jefe"), as_bytes("what do ya want for nothing?"))) ==
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("hash has no collisions over 1e5 random 64-byte inputs") {
  Rng rng(1);
  std::set<Digest> seen;
  for (int i = 0; i < 100000; ++i) seen.insert(hash(rng.bytes(64)));
  CHECK(seen.size() == 100000);
}

TEST_CASE("signatures verify only for the signed message and key") {
  Rng rng(5);
  const KeyPair kp = generate_signing_keypair(rng);
  const KeyPair other = generate_signing_keypair(rng);
  const Bytes msg = to_bytes("consent:v1");
  const Bytes sig = sign(kp.private_key, msg);
  CHECK(sig.size() == kSignatureSize);
  CHECK(verify(kp.public_key, msg, sig));
  CHECK_FALSE(verify(kp.public_key, to_bytes("consent:v2"), sig));
  CHECK_FALSE(verify(other.public_key, msg, sig));
  CHECK(sign(kp.private_key, msg) == sig);
  CHECK(error_code_of([&] { sign(Bytes(5), msg); }) == ErrorCode::kMalformedKey);
  CHECK(error_code_of([&] { verify(Bytes(31), msg, sig); }) ==
        ErrorCode::kMalformedKey);
}

TEST_CASE("box opens only with the recipient key and associated data") {
  Rng rng(6);
  const BoxKeyPair a = generate_box_keypair(rng);
  const BoxKeyPair b = generate_box_keypair(rng);
  const Bytes boxed = box_seal(a.public_key, to_bytes("key"), to_bytes("ad"), rng);
  CHECK(box_open(a.private_key, boxed, to_bytes("ad")) == to_bytes("key"));
  CHECK_FALSE(box_open(b.private_key, boxed, to_bytes("ad")));
  CHECK_FALSE(box_open(a.private_key, boxed, to_bytes("other")));
}

TEST_CASE("blind signature round trip agrees with a cpp_int oracle") {
  const RsaPrivateKey& sk = shared_rsa_key();
  const RsaPublicKey& pk = sk.public_key();
  const OracleKey ok = oracle_key(pk);
  CHECK(ok.e == 65537);
  CHECK(boost::multiprecision::msb(ok.n) + 1 == 2048);

  Rng rng(9);
  const std::string m = "vid-B||approval";
  CHECK(to_big(full_domain_hash(pk, as_bytes(m))) == oracle_fdh(pk, m));

  const BlindedMessage b = blind(as_bytes(m), pk, rng);
  const Bytes sig = unblind(sign_blinded(sk, b.value), b.blinding_factor, pk);
  CHECK(rsa_fdh_verify(pk, as_bytes(m), sig));
  CHECK(sig == rsa_fdh_sign(sk, as_bytes(m)));
  CHECK(boost::multiprecision::powm(to_big(sig), ok.e, ok.n) ==
        oracle_fdh(pk, m));
  CHECK_FALSE(rsa_fdh_verify(pk, as_bytes("vid-C||approval"), sig));

  const BlindedMessage b2 = blind(as_bytes(m), pk, rng);
  CHECK(b2.value != b.value);
}

TEST_CASE("blind signature round trip holds for 1000 random messages") {
  Rng key_rng(77);
  const RsaPrivateKey sk = RsaPrivateKey::generate(key_rng, 1024);
  const RsaPublicKey& pk = sk.public_key();
  Rng rng(78);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const Bytes m = rng.bytes(1 + (i % 64));
    const BlindedMessage b = blind(m, pk, rng);
    const Bytes sig = unblind(sign_blinded(sk, b.value), b.blinding_factor, pk);
    ok += rsa_fdh_verify(pk, m, sig) ? 1 : 0;
  }
  CHECK(ok == 1000);
}

TEST_CASE("blinded values of a fixed message look uniform") {
  const RsaPublicKey& pk = shared_rsa_key().public_key();
  Rng rng(10);
  Bytes low_bytes;
  for (int i = 0; i < 1000; ++i) {
    low_bytes.push_back(blind(as_bytes("vid-B||approval"), pk, rng).value.back());
  }
  CHECK(pbd::testing::chi_square_uniform_bytes(low_bytes) > 0.01);
}

TEST_CASE("sign_blinded rejects values outside the group") {
  const RsaPrivateKey& sk = shared_rsa_key();
  const Bytes too_big(sk.public_key().modulus_bytes(), 0xff);
  CHECK(error_code_of([&] { sign_blinded(sk, too_big); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("rsa public key serialisation round trips") {
  const RsaPublicKey& pk = shared_rsa_key().public_key();
  CHECK(RsaPublicKey::parse(pk.serialize()) == pk);
  CHECK(error_code_of([] { RsaPublicKey::parse(to_bytes("junk")); }) ==
        ErrorCode::kMalformedKey);
}

TEST_CASE("type ids parse, normalise and round trip") {
  const TypeId t = TypeId::parse("DT4/MedicalRecord(abc)");
  CHECK(t.name() == "DT4/MedicalRecord");
  CHECK(t.subject_parameter() == std::optional<std::string>("abc"));
  CHECK(TypeId::parse(t.canonical()) == t);
  // U+0065 U+0301 composes to U+00E9.
  CHECK(TypeId("Caf\x65\xcc\x81").name() == "Caf\xc3\xa9");
  CHECK(TypeId("Caf\x65\xcc\x81") == TypeId("Caf\xc3\xa9"));
  CHECK(TypeId("dt4") != TypeId("DT4"));
  CHECK(error_code_of([] { TypeId::parse(""); }) == ErrorCode::kMalformed);
  CHECK(error_code_of([] { TypeId::parse("A(b"); }) == ErrorCode::kMalformed);
  CHECK(error_code_of([] { TypeId::parse("A()"); }) == ErrorCode::kMalformed);
  CHECK(error_code_of([] { TypeId("bad\xff"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("type patterns match by name and prefix") {
  const TypePattern p = TypePattern::parse("DT4/MedicalRecord(x)");
  CHECK(p.variable() == std::optional<std::string>("x"));
  CHECK(p.matches(TypeId("DT4/MedicalRecord", "s")));
  CHECK_FALSE(p.matches(TypeId("DT5/MedicalRecord")));
  CHECK(TypePattern::parse("DT*").matches(TypeId("DT5/Summary")));
  CHECK(error_code_of([] { TypePattern::parse("D*T"); }) ==
        ErrorCode::kMalformed);
}

TEST_CASE("envelopes bind type, subject and producer") {
  Rng rng(11);
  const BoxKeyPair reg = generate_box_keypair(rng);
  const KeyPair producer = generate_signing_keypair(rng);
  const KeyPair stranger = generate_signing_keypair(rng);
  const TypeId dt4("DT4/MedicalRecord");
  const TypeId dt5("DT5/MedicalRecord");
  const SubjectTag subject = rng.digest();
  const Bytes payload = to_bytes("diagnosis=ok");

  const Envelope env = seal(dt4, subject, payload, reg.public_key, producer, rng);
  CHECK(Envelope::parse(env.serialize()) == env);
  CHECK_FALSE(contains(env.serialize(), payload));

  const auto key = unwrap_data_key(reg.private_key, env.wrapped_key, dt4, subject);
  REQUIRE(key);
  CHECK(open(env, *key, {dt4, subject, producer.public_key}) == payload);

  CHECK_FALSE(unwrap_data_key(reg.private_key, env.wrapped_key, dt5, subject));
  CHECK_FALSE(unwrap_data_key(reg.private_key, env.wrapped_key, dt4, rng.digest()));
  CHECK(error_code_of([&] {
          open(env, *key, {dt5, subject, producer.public_key});
        }) == ErrorCode::kTypeMismatch);
  CHECK(error_code_of([&] {
          open(env, *key, {dt4, std::nullopt, producer.public_key});
        }) == ErrorCode::kTypeMismatch);
  CHECK(error_code_of([&] {
          open(env, *key, {dt4, subject, stranger.public_key});
        }) == ErrorCode::kSignatureInvalid);
  DataKey wrong = *key;
  wrong[0] ^= 1;
  CHECK(error_code_of([&] {
          open(env, wrong, {dt4, subject, producer.public_key});
        }) == ErrorCode::kKeyMismatch);
}

TEST_CASE("every single-bit ciphertext flip is rejected") {
  Rng rng(12);
  const BoxKeyPair reg = generate_box_keypair(rng);
  const KeyPair producer = generate_signing_keypair(rng);
  const TypeId dt4("DT4/MedicalRecord");
  const Envelope env =
      seal(dt4, std::nullopt, rng.bytes(109), reg.public_key, producer, rng);
  const auto key = unwrap_data_key(reg.private_key, env.wrapped_key, dt4, {});
  REQUIRE(key);
  const OpenClaim claim{dt4, std::nullopt, producer.public_key};
  const std::size_t bits = env.ciphertext.size() * 8;

  int raw_rejected = 0;
  int resigned_rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t bit = static_cast<std::size_t>(i) % bits;
    Envelope m = env;
    m.ciphertext[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    if (error_code_of([&] { open(m, *key, claim); }) ==
        ErrorCode::kSignatureInvalid) {
      ++raw_rejected;
    }
    m.producer_sig = sign(producer.private_key, m.signed_portion());
    if (error_code_of([&] { open(m, *key, claim); }) == ErrorCode::kKeyMismatch) {
      ++resigned_rejected;
    }
  }
  CHECK(raw_rejected == 1000);
  CHECK(resigned_rejected == 1000);
}

TEST_CASE("mutation fuzz never opens a wrong claim") {
  Rng rng(13);
  const BoxKeyPair reg = generate_box_keypair(rng);
  const KeyPair producer = generate_signing_keypair(rng);
  const KeyPair other = generate_signing_keypair(rng);
  const TypeId types[] = {TypeId("DT2/MRIScan"), TypeId("DT4/MedicalRecord"),
                          TypeId("DT5/MedicalRecord")};
  int wrong_opened = 0;
  int right_failed = 0;
  for (int i = 0; i < 400; ++i) {
    const TypeId& t = types[i % 3];
    const SubjectTag s = (i % 2) ? SubjectTag(rng.digest()) : std::nullopt;
    const Envelope env = seal(t, s, rng.bytes(32), reg.public_key, producer, rng);
    const auto key = unwrap_data_key(reg.private_key, env.wrapped_key, t, s);
    if (!key) {
      ++right_failed;
      continue;
    }
    OpenClaim claim{t, s, producer.public_key};
    if (error_code_of([&] { open(env, *key, claim); })) ++right_failed;
    switch (i % 4) {
      case 0: claim.type_id = types[(i + 1) % 3]; break;
      case 1: claim.subject = rng.digest(); break;
      case 2: claim.producer_public_key = other.public_key; break;
      default: claim.subject = s ? SubjectTag() : SubjectTag(rng.digest()); break;
    }
    if (!error_code_of([&] { open(env, *key, claim); })) ++wrong_opened;
  }
  CHECK(wrong_opened == 0);
  CHECK(right_failed == 0);
}

TEST_CASE("envelope parser rejects malformed input") {
  Rng rng(14);
  const BoxKeyPair reg = generate_box_keypair(rng);
  const KeyPair producer = generate_signing_keypair(rng);
  const Envelope env =
      seal(TypeId("X"), std::nullopt, to_bytes("p"), reg.public_key, producer, rng);
  Bytes ser = env.serialize();
  ser.push_back(0);
  CHECK(error_code_of([&] { Envelope::parse(ser); }) == ErrorCode::kMalformed);
  const Bytes bad_type = FrameWriter("PBD1")
                             .field("A(")
                             .field(Bytes{})
                             .field(Bytes{})
                             .field(Bytes(12))
                             .field(Bytes{})
                             .field(Bytes{})
                             .finish();
  CHECK(error_code_of([&] { Envelope::parse(bad_type); }) ==
        ErrorCode::kMalformed);
}
