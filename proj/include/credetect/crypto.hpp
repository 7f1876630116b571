#pragma once

// Identities, certificates, signatures and the hybrid envelope that lets only
// the detection agency read submitted media.
//
// Every key holder owns two 32-byte keys: an Ed25519 key for signatures and an
// X25519 key for key agreement. Both travel together as one PublicKey.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "json.hpp"

#include "credetect/bytes.hpp"

namespace credetect {

using Sha256Digest = std::array<std::uint8_t, 32>;
Sha256Digest sha256(ByteView data);

using Signature = std::array<std::uint8_t, 64>;

struct PublicKey {
  std::array<std::uint8_t, 32> signing{};
  std::array<std::uint8_t, 32> exchange{};

  std::string to_base64() const;
  static PublicKey from_base64(std::string_view text);

  bool operator==(const PublicKey&) const = default;
};

struct SecretKey {
  std::array<std::uint8_t, 32> signing_seed{};
  std::array<std::uint8_t, 32> exchange{};

  std::string to_base64() const;
  static SecretKey from_base64(std::string_view text);
};

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;

  // Session and identity keys come from a seeded generator so runs are
  // reproducible. Not suitable for production key material.
  static KeyPair from_seed(std::uint64_t seed);
};

Signature sign(const SecretKey& secret_key, ByteView message);
bool verify_sig(const PublicKey& public_key, ByteView message, const Signature& signature) noexcept;

struct Certificate {
  std::string subject_identity;
  PublicKey subject_public_key;
  std::string issuer;
  Signature signature{};

  // Bytes covered by the issuer signature.
  Bytes signed_bytes() const;

  nlohmann::ordered_json to_json() const;
  static Certificate from_json(const nlohmann::ordered_json& j);

  bool operator==(const Certificate&) const = default;
};

bool verify_certificate(const Certificate& cert, const PublicKey& ca_public_key) noexcept;

class CertificateAuthority {
 public:
  CertificateAuthority(std::string identity, KeyPair keys)
      : identity_(std::move(identity)), keys_(std::move(keys)) {}

  Certificate issue(std::string subject_identity, const PublicKey& subject_key) const;

  const std::string& identity() const noexcept { return identity_; }
  const PublicKey& public_key() const noexcept { return keys_.public_key; }
  const SecretKey& secret_key() const noexcept { return keys_.secret_key; }

 private:
  std::string identity_;
  KeyPair keys_;
};

struct AuthenticatedPeer {
  std::string identity;
  PublicKey public_key;
};

enum class CertificateSide { First, Second };

// Both certificates must verify; otherwise the exchange aborts with
// InvalidCertificate naming the offending side and nothing is returned.
std::pair<AuthenticatedPeer, AuthenticatedPeer> mutual_authenticate(const Certificate& first,
                                                                    const Certificate& second,
                                                                    const PublicKey& ca_public_key);

struct HybridCiphertext {
  // ephemeral X25519 public key (32) || AES-256-GCM(kek, session key) (32) || tag (16)
  Bytes wrapped_key;
  // nonce (12) || AES-256-GCM(session key, m) || tag (16); wrapped_key is bound as AAD
  Bytes body;

  Bytes serialize() const;
  static HybridCiphertext deserialize(ByteView bytes);
};

HybridCiphertext hybrid_encrypt(const PublicKey& recipient, ByteView plaintext, std::uint64_t rng_seed);
Bytes hybrid_decrypt(const SecretKey& recipient, const HybridCiphertext& ciphertext);

}  // namespace credetect
