#include <gtest/gtest.h>
#include <sodium.h>

#include <set>

#include "credetect/crypto.hpp"
#include "credetect/rng.hpp"
#include "test_util.hpp"

using namespace credetect;

namespace {

CertificateAuthority make_ca(std::uint64_t seed = 1000, std::string name = "CA") {
  return CertificateAuthority(std::move(name), KeyPair::from_seed(seed));
}

Bytes random_bytes(DeterministicRng& rng, std::size_t n) {
  Bytes b(n);
  rng.fill(b);
  return b;
}

}  // namespace

TEST(Keys, SeededAndDistinct) {
  const auto a = KeyPair::from_seed(1), b = KeyPair::from_seed(1), c = KeyPair::from_seed(2);
  EXPECT_EQ(a.public_key, b.public_key);
  EXPECT_FALSE(a.public_key == c.public_key);
  EXPECT_EQ(PublicKey::from_base64(a.public_key.to_base64()), a.public_key);
  const auto s = SecretKey::from_base64(a.secret_key.to_base64());
  EXPECT_EQ(s.signing_seed, a.secret_key.signing_seed);
  EXPECT_CODE(PublicKey::from_base64("AAAA"), ParseError);
}

TEST(Signature, RoundTripAndWrongKey) {
  const auto k = KeyPair::from_seed(5), other = KeyPair::from_seed(6);
  const auto msg = to_bytes("message to sign");
  const auto sig = sign(k.secret_key, msg);
  EXPECT_TRUE(verify_sig(k.public_key, msg, sig));
  EXPECT_FALSE(verify_sig(other.public_key, msg, sig));
}

TEST(Signature, AgreesWithSecondImplementation) {
  ASSERT_GE(sodium_init(), 0);
  DeterministicRng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto k = KeyPair::from_seed(rng.next());
    unsigned char pk[crypto_sign_PUBLICKEYBYTES], sk[crypto_sign_SECRETKEYBYTES];
    crypto_sign_seed_keypair(pk, sk, k.secret_key.signing_seed.data());
    EXPECT_EQ(0, std::memcmp(pk, k.public_key.signing.data(), 32));
    const auto msg = random_bytes(rng, rng.uniform(300));
    const auto sig = sign(k.secret_key, msg);
    EXPECT_EQ(0, crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pk));
    // Ed25519 is deterministic, so both implementations produce the same bytes.
    unsigned char sig2[64];
    crypto_sign_detached(sig2, nullptr, msg.data(), msg.size(), sk);
    EXPECT_EQ(0, std::memcmp(sig2, sig.data(), 64));
  }
}

TEST(Signature, MutationSweep) {
  DeterministicRng rng(4);
  const auto k = KeyPair::from_seed(7);
  const auto msg = random_bytes(rng, 256);
  const auto sig = sign(k.secret_key, msg);
  for (int i = 0; i < 10000; ++i) {
    auto m = msg;
    auto s = sig;
    if (i % 2 == 0) {
      m[rng.uniform(m.size())] ^= static_cast<std::uint8_t>(1 + rng.uniform(255));
    } else {
      s[rng.uniform(s.size())] ^= static_cast<std::uint8_t>(1 + rng.uniform(255));
    }
    ASSERT_FALSE(verify_sig(k.public_key, m, s)) << "trial " << i;
  }
}

TEST(Certificate, IssueAndVerify) {
  const auto ca = make_ca();
  const auto subject = KeyPair::from_seed(11);
  const auto cert = ca.issue("MP1", subject.public_key);
  EXPECT_TRUE(verify_certificate(cert, ca.public_key()));
  EXPECT_EQ(cert.issuer, "CA");
  EXPECT_EQ(Certificate::from_json(cert.to_json()), cert);
}

TEST(Certificate, TamperingBreaksBinding) {
  const auto ca = make_ca();
  auto cert = ca.issue("MP1", KeyPair::from_seed(11).public_key);
  auto c1 = cert;
  c1.subject_identity[0] ^= 1;
  EXPECT_FALSE(verify_certificate(c1, ca.public_key()));
  auto c2 = cert;
  c2.subject_public_key.exchange[3] ^= 1;
  EXPECT_FALSE(verify_certificate(c2, ca.public_key()));
  auto c3 = cert;
  c3.issuer = "CA2";
  EXPECT_FALSE(verify_certificate(c3, ca.public_key()));
}

TEST(Certificate, ForeignCaRejected) {
  const auto ca = make_ca(1000), rogue = make_ca(2000);
  const auto cert = rogue.issue("MP1", KeyPair::from_seed(11).public_key);
  EXPECT_FALSE(verify_certificate(cert, ca.public_key()));
  EXPECT_TRUE(verify_certificate(cert, rogue.public_key()));
}

TEST(MutualAuth, BothValid) {
  const auto ca = make_ca();
  const auto a = ca.issue("MP1", KeyPair::from_seed(1).public_key);
  const auto b = ca.issue("DA", KeyPair::from_seed(2).public_key);
  const auto [pa, pb] = mutual_authenticate(a, b, ca.public_key());
  EXPECT_EQ(pa.identity, "MP1");
  EXPECT_EQ(pb.identity, "DA");
  EXPECT_EQ(pb.public_key, KeyPair::from_seed(2).public_key);
}

TEST(MutualAuth, AnyBadSideAborts) {
  const auto ca = make_ca(), rogue = make_ca(2000);
  const auto good = ca.issue("MP1", KeyPair::from_seed(1).public_key);
  auto tampered = ca.issue("DA", KeyPair::from_seed(2).public_key);
  tampered.signature[0] ^= 1;
  const auto foreign = rogue.issue("DA", KeyPair::from_seed(2).public_key);
  EXPECT_CODE(mutual_authenticate(good, tampered, ca.public_key()), InvalidCertificate);
  EXPECT_CODE(mutual_authenticate(tampered, good, ca.public_key()), InvalidCertificate);
  EXPECT_CODE(mutual_authenticate(good, foreign, ca.public_key()), InvalidCertificate);
}

TEST(Hybrid, RoundTrip) {
  const auto r = KeyPair::from_seed(42);
  const auto m = to_bytes("media payload bytes");
  const auto ct = hybrid_encrypt(r.public_key, m, 1);
  EXPECT_EQ(hybrid_decrypt(r.secret_key, ct), m);
  EXPECT_EQ(ct.wrapped_key.size(), 32u + 32u + 16u);
  EXPECT_EQ(ct.body.size(), 12u + m.size() + 16u);
  const auto back = HybridCiphertext::deserialize(ct.serialize());
  EXPECT_EQ(hybrid_decrypt(r.secret_key, back), m);
}

TEST(Hybrid, DifferentSeedsDifferentCiphertexts) {
  const auto r = KeyPair::from_seed(42);
  const auto m = to_bytes("same plaintext");
  const auto c1 = hybrid_encrypt(r.public_key, m, 1), c2 = hybrid_encrypt(r.public_key, m, 2);
  EXPECT_NE(c1.serialize(), c2.serialize());
  EXPECT_EQ(hybrid_decrypt(r.secret_key, c1), m);
  EXPECT_EQ(hybrid_decrypt(r.secret_key, c2), m);
}

TEST(Hybrid, WrongKeyFails) {
  const auto r = KeyPair::from_seed(42), other = KeyPair::from_seed(43);
  const auto ct = hybrid_encrypt(r.public_key, to_bytes("secret"), 1);
  EXPECT_CODE(hybrid_decrypt(other.secret_key, ct), DecryptionFailure);
}

TEST(Hybrid, EmptyPlaintextRejected) {
  EXPECT_CODE(hybrid_encrypt(KeyPair::from_seed(1).public_key, Bytes{}, 1), EmptyPlaintext);
}

TEST(Hybrid, EveryTamperedByteFails) {
  const auto r = KeyPair::from_seed(42);
  const auto ct = hybrid_encrypt(r.public_key, to_bytes("tamper target text"), 9);
  for (std::size_t i = 0; i < ct.body.size(); ++i) {
    auto t = ct;
    t.body[i] ^= 0x01;
    EXPECT_CODE(hybrid_decrypt(r.secret_key, t), DecryptionFailure);
  }
  for (std::size_t i = 0; i < ct.wrapped_key.size(); ++i) {
    auto t = ct;
    t.wrapped_key[i] ^= 0x80;
    EXPECT_CODE(hybrid_decrypt(r.secret_key, t), DecryptionFailure);
  }
}

TEST(Hybrid, TruncatedOrMalformed) {
  const auto r = KeyPair::from_seed(42);
  const auto wire = hybrid_encrypt(r.public_key, to_bytes("abc"), 9).serialize();
  EXPECT_CODE(HybridCiphertext::deserialize(ByteView(wire).first(3)), DecryptionFailure);
  EXPECT_CODE(HybridCiphertext::deserialize(ByteView(wire).first(40)), DecryptionFailure);
  const auto chopped = HybridCiphertext::deserialize(ByteView(wire).first(wire.size() - 1));
  EXPECT_CODE(hybrid_decrypt(r.secret_key, chopped), DecryptionFailure);
  HybridCiphertext empty;
  EXPECT_CODE(hybrid_decrypt(r.secret_key, empty), DecryptionFailure);
}

TEST(Sha256, KnownVector) {
  const auto d = sha256(as_bytes(std::string_view("abc")));
  EXPECT_EQ(to_hex(d), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Encoding, HexAndBase64) {
  const Bytes b{0x00, 0xff, 0x10};
  EXPECT_EQ(to_hex(b), "00ff10");
  EXPECT_EQ(from_hex("00ff10"), b);
  EXPECT_CODE(from_hex("00FF10"), ParseError);
  EXPECT_CODE(from_hex("abc"), ParseError);
  EXPECT_EQ(base64_decode(base64_encode(b)), b);
  EXPECT_CODE(base64_decode("abc"), ParseError);
  EXPECT_CODE(base64_decode("AB=="), ParseError);  // non-canonical padding bits
}
