#pragma once

// Messages exchanged through the ledger and the records the contract keeps.
// Every payload has one canonical JSON form (fixed key order, optional fields
// omitted) so that signatures and block hashes are reproducible.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

#include "credetect/bytes.hpp"
#include "credetect/crypto.hpp"
#include "credetect/fingerprint.hpp"

namespace credetect {

using Serial = std::uint64_t;  // legal-media serial N, starts at 1
using TaskId = std::uint64_t;  // starts at 1
using Tick = std::uint64_t;    // logical clock
using Amount = std::int64_t;   // integer currency units

enum class Verdict { CompletePiracy, PartialPiracy, Legitimate };
std::string_view to_string(Verdict v) noexcept;
Verdict verdict_from_string(std::string_view name);

struct LegalMediaRecord {
  Serial serial = 0;
  HashId hash_id;
  SimHashValue lshv;
  AddressHash qm;

  bool operator==(const LegalMediaRecord&) const = default;
};

// CompletePiracy carries [N, hashID, QM], PartialPiracy [N, lshv, QM] and
// Legitimate {N', hashID, lshv, QM}. `serial` is N for piracy verdicts and the
// newly assigned N' for a legitimate one.
struct ResultRecord {
  Verdict verdict = Verdict::Legitimate;
  Serial serial = 0;
  std::optional<HashId> hash_id;
  std::optional<SimHashValue> lshv;
  AddressHash qm;

  bool well_formed() const noexcept;
  bool operator==(const ResultRecord&) const = default;
};

struct ChallengeEvidence {
  Serial n_prime = 0;  // the medium registered by the challenged verdict
  Serial n = 0;        // the earlier legal medium it allegedly copies

  bool operator==(const ChallengeEvidence&) const = default;
};

// Genesis payload, signed by the certificate authority. Fixes the contract
// parameters and the initial balances for the whole run.
struct DeployPayload {
  std::string ca_identity;
  PublicKey ca_public_key;
  std::string detection_agency;
  unsigned theta = Threshold::kDefault;
  Tick timeout_ticks = 10;
  std::map<std::string, Amount> allocations;

  bool operator==(const DeployPayload&) const = default;
};

struct EnrollPayload {
  Certificate certificate;
  bool operator==(const EnrollPayload&) const = default;
};

struct RegisterPayload {
  HashId hash_id;
  SimHashValue lshv;
  AddressHash qm;
  bool operator==(const RegisterPayload&) const = default;
};

struct RequestDetectionPayload {
  AddressHash q;
  Amount fee = 0;
  bool operator==(const RequestDetectionPayload&) const = default;
};

struct PostResultPayload {
  TaskId task_id = 0;
  ResultRecord record;
  Amount deposit = 0;
  bool operator==(const PostResultPayload&) const = default;
};

struct ChallengePayload {
  TaskId task_id = 0;
  ChallengeEvidence evidence;
  bool operator==(const ChallengePayload&) const = default;
};

struct SettlePayload {
  TaskId task_id = 0;
  bool operator==(const SettlePayload&) const = default;
};

struct TransferPayload {
  std::string to;
  Amount amount = 0;
  bool operator==(const TransferPayload&) const = default;
};

using Payload = std::variant<DeployPayload, EnrollPayload, RegisterPayload, RequestDetectionPayload,
                             PostResultPayload, ChallengePayload, SettlePayload, TransferPayload>;

std::string_view payload_type(const Payload& p) noexcept;

nlohmann::ordered_json to_json(const LegalMediaRecord& r);
nlohmann::ordered_json to_json(const ResultRecord& r);
nlohmann::ordered_json to_json(const Payload& p);

// Strict parsers: unknown or missing keys and non-canonical encodings throw
// Error(ParseError).
LegalMediaRecord legal_record_from_json(const nlohmann::ordered_json& j);
ResultRecord result_record_from_json(const nlohmann::ordered_json& j);
Payload payload_from_json(const nlohmann::ordered_json& j);

}  // namespace credetect
