#include "credetect/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>

#include <cstring>
#include <memory>

#include "credetect/errors.hpp"
#include "credetect/rng.hpp"

namespace credetect {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const noexcept { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const noexcept { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const noexcept { EVP_CIPHER_CTX_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const noexcept { EVP_PKEY_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;

constexpr std::size_t kKeyLen = 32;
constexpr std::size_t kNonceLen = 12;
constexpr std::size_t kTagLen = 16;
constexpr std::size_t kWrappedLen = kKeyLen + kKeyLen + kTagLen;
constexpr std::string_view kWrapInfo = "credetect/hybrid/key-wrap/v1";

[[noreturn]] void openssl_failure(const char* what) {
  throw std::runtime_error(std::string("openssl failure: ") + what);
}

PkeyPtr raw_private(int type, std::span<const std::uint8_t, 32> key) {
  PkeyPtr p(EVP_PKEY_new_raw_private_key(type, nullptr, key.data(), key.size()));
  if (!p) openssl_failure("EVP_PKEY_new_raw_private_key");
  return p;
}

PkeyPtr raw_public(int type, std::span<const std::uint8_t, 32> key) {
  return PkeyPtr(EVP_PKEY_new_raw_public_key(type, nullptr, key.data(), key.size()));
}

std::array<std::uint8_t, 32> public_of(int type, std::span<const std::uint8_t, 32> secret) {
  auto p = raw_private(type, secret);
  std::array<std::uint8_t, 32> out{};
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(p.get(), out.data(), &len) != 1 || len != out.size())
    openssl_failure("EVP_PKEY_get_raw_public_key");
  return out;
}

// X25519 shared secret; nullopt if the peer key is malformed or low-order.
std::optional<std::array<std::uint8_t, 32>> x25519(std::span<const std::uint8_t, 32> secret,
                                                   std::span<const std::uint8_t, 32> peer_public) {
  auto self = raw_private(EVP_PKEY_X25519, secret);
  auto peer = raw_public(EVP_PKEY_X25519, peer_public);
  if (!peer) return std::nullopt;
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(self.get(), nullptr));
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1) openssl_failure("derive init");
  if (EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1) return std::nullopt;
  std::array<std::uint8_t, 32> shared{};
  std::size_t len = shared.size();
  if (EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 || len != shared.size())
    return std::nullopt;
  return shared;
}

std::array<std::uint8_t, 32> hkdf_sha256(ByteView ikm, ByteView salt, std::string_view info) {
  std::array<std::uint8_t, 32> out{};
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())) != 1 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(info.data()),
                                  static_cast<int>(info.size())) != 1)
    openssl_failure("hkdf setup");
  std::size_t len = out.size();
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1) openssl_failure("hkdf derive");
  return out;
}

// Returns ciphertext || tag.
Bytes gcm_seal(std::span<const std::uint8_t, 32> key, std::span<const std::uint8_t> nonce,
               ByteView plaintext, ByteView aad) {
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  Bytes out(plaintext.size() + kTagLen);
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                          nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1)
    openssl_failure("gcm init");
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
    openssl_failure("gcm aad");
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    openssl_failure("gcm update");
  int tail = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) openssl_failure("gcm final");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen,
                          out.data() + plaintext.size()) != 1)
    openssl_failure("gcm tag");
  return out;
}

std::optional<Bytes> gcm_open(std::span<const std::uint8_t, 32> key,
                              std::span<const std::uint8_t> nonce, ByteView sealed, ByteView aad) {
  if (sealed.size() < kTagLen) return std::nullopt;
  const std::size_t n = sealed.size() - kTagLen;
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  Bytes out(n);
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                          nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1)
    openssl_failure("gcm init");
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
    return std::nullopt;
  if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(n)) != 1)
    return std::nullopt;
  Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(n), sealed.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()) != 1)
    return std::nullopt;
  int tail = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) return std::nullopt;
  return out;
}

void append_field(Bytes& out, std::string_view s) {
  const auto n = static_cast<std::uint32_t>(s.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(n >> shift));
  out.insert(out.end(), s.begin(), s.end());
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_base64(std::string_view text, const char* what) {
  auto raw = base64_decode(text);
  if (raw.size() != N) throw Error(ErrorCode::ParseError, std::string("wrong length for ") + what);
  std::array<std::uint8_t, N> out{};
  std::memcpy(out.data(), raw.data(), N);
  return out;
}

}  // namespace

Sha256Digest sha256(ByteView data) {
  Sha256Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
    openssl_failure("sha256");
  return out;
}

std::string PublicKey::to_base64() const {
  Bytes raw(signing.begin(), signing.end());
  raw.insert(raw.end(), exchange.begin(), exchange.end());
  return base64_encode(raw);
}

PublicKey PublicKey::from_base64(std::string_view text) {
  auto raw = fixed_from_base64<64>(text, "public key");
  PublicKey k;
  std::memcpy(k.signing.data(), raw.data(), 32);
  std::memcpy(k.exchange.data(), raw.data() + 32, 32);
  return k;
}

std::string SecretKey::to_base64() const {
  Bytes raw(signing_seed.begin(), signing_seed.end());
  raw.insert(raw.end(), exchange.begin(), exchange.end());
  return base64_encode(raw);
}

SecretKey SecretKey::from_base64(std::string_view text) {
  auto raw = fixed_from_base64<64>(text, "secret key");
  SecretKey k;
  std::memcpy(k.signing_seed.data(), raw.data(), 32);
  std::memcpy(k.exchange.data(), raw.data() + 32, 32);
  return k;
}

KeyPair KeyPair::from_seed(std::uint64_t seed) {
  DeterministicRng rng(seed);
  KeyPair kp;
  rng.fill(kp.secret_key.signing_seed);
  rng.fill(kp.secret_key.exchange);
  kp.public_key.signing = public_of(EVP_PKEY_ED25519, kp.secret_key.signing_seed);
  kp.public_key.exchange = public_of(EVP_PKEY_X25519, kp.secret_key.exchange);
  return kp;
}

Signature sign(const SecretKey& secret_key, ByteView message) {
  auto key = raw_private(EVP_PKEY_ED25519, secret_key.signing_seed);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  Signature sig{};
  std::size_t len = sig.size();
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1)
    openssl_failure("ed25519 sign");
  return sig;
}

bool verify_sig(const PublicKey& public_key, ByteView message, const Signature& signature) noexcept {
  auto key = raw_public(EVP_PKEY_ED25519, public_key.signing);
  if (!key) return false;
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

Bytes Certificate::signed_bytes() const {
  Bytes out;
  append_field(out, "credetect/certificate/v1");
  append_field(out, subject_identity);
  append_field(out, to_string(ByteView(subject_public_key.signing)));
  append_field(out, to_string(ByteView(subject_public_key.exchange)));
  append_field(out, issuer);
  return out;
}

nlohmann::ordered_json Certificate::to_json() const {
  nlohmann::ordered_json j;
  j["identity"] = subject_identity;
  j["public_key"] = subject_public_key.to_base64();
  j["issuer"] = issuer;
  j["signature"] = base64_encode(signature);
  return j;
}

Certificate Certificate::from_json(const nlohmann::ordered_json& j) {
  try {
    Certificate c;
    c.subject_identity = j.at("identity").get<std::string>();
    c.subject_public_key = PublicKey::from_base64(j.at("public_key").get<std::string>());
    c.issuer = j.at("issuer").get<std::string>();
    c.signature = fixed_from_base64<64>(j.at("signature").get<std::string>(), "signature");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("certificate: ") + e.what());
  }
}

bool verify_certificate(const Certificate& cert, const PublicKey& ca_public_key) noexcept {
  try {
    return verify_sig(ca_public_key, cert.signed_bytes(), cert.signature);
  } catch (...) {
    return false;
  }
}

Certificate CertificateAuthority::issue(std::string subject_identity,
                                        const PublicKey& subject_key) const {
  Certificate c;
  c.subject_identity = std::move(subject_identity);
  c.subject_public_key = subject_key;
  c.issuer = identity_;
  c.signature = sign(keys_.secret_key, c.signed_bytes());
  return c;
}

std::pair<AuthenticatedPeer, AuthenticatedPeer> mutual_authenticate(const Certificate& first,
                                                                    const Certificate& second,
                                                                    const PublicKey& ca_public_key) {
  if (!verify_certificate(first, ca_public_key))
    throw Error(ErrorCode::InvalidCertificate, "first certificate (" + first.subject_identity + ")");
  if (!verify_certificate(second, ca_public_key))
    throw Error(ErrorCode::InvalidCertificate,
                "second certificate (" + second.subject_identity + ")");
  return {AuthenticatedPeer{first.subject_identity, first.subject_public_key},
          AuthenticatedPeer{second.subject_identity, second.subject_public_key}};
}

Bytes HybridCiphertext::serialize() const {
  Bytes out;
  out.reserve(4 + wrapped_key.size() + body.size());
  const auto n = static_cast<std::uint32_t>(wrapped_key.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(n >> shift));
  out.insert(out.end(), wrapped_key.begin(), wrapped_key.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

HybridCiphertext HybridCiphertext::deserialize(ByteView bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::DecryptionFailure, "truncated ciphertext");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | bytes[i];
  if (bytes.size() < 4 + static_cast<std::size_t>(n))
    throw Error(ErrorCode::DecryptionFailure, "truncated ciphertext");
  HybridCiphertext ct;
  ct.wrapped_key.assign(bytes.begin() + 4, bytes.begin() + 4 + n);
  ct.body.assign(bytes.begin() + 4 + n, bytes.end());
  return ct;
}

HybridCiphertext hybrid_encrypt(const PublicKey& recipient, ByteView plaintext,
                                std::uint64_t rng_seed) {
  if (plaintext.empty()) throw Error(ErrorCode::EmptyPlaintext, "nothing to encrypt");
  DeterministicRng rng(rng_seed);
  std::array<std::uint8_t, 32> session_key{};
  std::array<std::uint8_t, 32> ephemeral{};
  std::array<std::uint8_t, kNonceLen> nonce{};
  rng.fill(session_key);
  rng.fill(ephemeral);
  rng.fill(nonce);

  const auto ephemeral_public = public_of(EVP_PKEY_X25519, ephemeral);
  const auto shared = x25519(ephemeral, recipient.exchange);
  if (!shared) throw Error(ErrorCode::InvalidCertificate, "recipient exchange key is unusable");
  Bytes salt(ephemeral_public.begin(), ephemeral_public.end());
  salt.insert(salt.end(), recipient.exchange.begin(), recipient.exchange.end());
  const auto kek = hkdf_sha256(*shared, salt, kWrapInfo);

  // The kek is single-use, so a fixed all-zero nonce is safe for the wrap.
  const std::array<std::uint8_t, kNonceLen> zero_nonce{};
  HybridCiphertext ct;
  ct.wrapped_key.assign(ephemeral_public.begin(), ephemeral_public.end());
  auto wrapped = gcm_seal(kek, zero_nonce, session_key, {});
  ct.wrapped_key.insert(ct.wrapped_key.end(), wrapped.begin(), wrapped.end());

  ct.body.assign(nonce.begin(), nonce.end());
  auto sealed = gcm_seal(session_key, nonce, plaintext, ct.wrapped_key);
  ct.body.insert(ct.body.end(), sealed.begin(), sealed.end());
  return ct;
}

Bytes hybrid_decrypt(const SecretKey& recipient, const HybridCiphertext& ct) {
  if (ct.wrapped_key.size() != kWrappedLen || ct.body.size() < kNonceLen + kTagLen)
    throw Error(ErrorCode::DecryptionFailure, "malformed ciphertext");
  std::array<std::uint8_t, 32> ephemeral_public{};
  std::memcpy(ephemeral_public.data(), ct.wrapped_key.data(), 32);
  const auto own_public = public_of(EVP_PKEY_X25519, recipient.exchange);
  const auto shared = x25519(recipient.exchange, ephemeral_public);
  if (!shared) throw Error(ErrorCode::DecryptionFailure, "bad ephemeral key");
  Bytes salt(ephemeral_public.begin(), ephemeral_public.end());
  salt.insert(salt.end(), own_public.begin(), own_public.end());
  const auto kek = hkdf_sha256(*shared, salt, kWrapInfo);

  const std::array<std::uint8_t, kNonceLen> zero_nonce{};
  auto session = gcm_open(kek, zero_nonce, ByteView(ct.wrapped_key).subspan(32), {});
  if (!session || session->size() != kKeyLen)
    throw Error(ErrorCode::DecryptionFailure, "session key unwrap failed");
  std::array<std::uint8_t, 32> session_key{};
  std::memcpy(session_key.data(), session->data(), 32);

  auto body = ByteView(ct.body);
  auto plain = gcm_open(session_key, body.first(kNonceLen), body.subspan(kNonceLen), ct.wrapped_key);
  if (!plain) throw Error(ErrorCode::DecryptionFailure, "body authentication failed");
  return std::move(*plain);
}

}  // namespace credetect
