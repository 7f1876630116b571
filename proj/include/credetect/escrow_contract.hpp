#pragma once

// The on-chain contract: legal-media registry, fee/deposit escrow, the two
// judge functions, challenge arbitration and deadline settlement.
//
// Every mutating call validates fully before touching state, so a call that
// throws leaves the contract unchanged. Calls must be made in ledger order;
// the class is not safe for concurrent mutation.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "credetect/fingerprint.hpp"
#include "credetect/protocol.hpp"

namespace credetect {

enum class TaskState { Requested, ResultPosted, Challenged, SettledToDA, SettledToMP };
std::string_view to_string(TaskState s) noexcept;
inline bool is_terminal(TaskState s) noexcept { return s == TaskState::SettledToDA || s == TaskState::SettledToMP; }

// Registrations made by a Legitimate verdict stay provisional until the
// challenge window closes; a successful challenge revokes them.
enum class RegistryStatus { Confirmed, Provisional, Revoked };
std::string_view to_string(RegistryStatus s) noexcept;

struct RegistryEntry {
  LegalMediaRecord record;
  RegistryStatus status = RegistryStatus::Confirmed;
  std::string registrant;
  std::optional<TaskId> origin_task;
  Tick registered_at = 0;
};

struct ChallengeAttempt {
  std::string challenger;
  ChallengeEvidence evidence;
  bool succeeded = false;
  Tick at = 0;
};

struct Payout {
  std::string to;
  Amount amount = 0;

  bool operator==(const Payout&) const = default;
};

struct DetectionTask {
  TaskId id = 0;
  std::string requester;
  AddressHash q;
  Amount fee = 0;
  Amount deposit = 0;  // 0 until a result is posted
  TaskState state = TaskState::Requested;
  std::optional<ResultRecord> result;
  Tick requested_at = 0;
  Tick deadline = 0;
  std::optional<Tick> posted_at;
  std::optional<bool> judge_passed;  // set when the contract itself checked the result
  std::vector<ChallengeAttempt> challenges;
  std::optional<Tick> settled_at;
};

struct ChallengeOutcome {
  bool succeeded = false;
  std::vector<Payout> payouts;
};

enum class RegistryEventKind { Registered, Confirmed, Revoked };
std::string_view to_string(RegistryEventKind k) noexcept;

struct RegistryEvent {
  RegistryEventKind kind = RegistryEventKind::Registered;
  Serial serial = 0;
};

// What one applied transaction did.
struct ContractOutcome {
  std::optional<Serial> serial;
  std::optional<TaskId> task_id;
  std::optional<bool> challenge_succeeded;
  std::vector<Payout> payouts;
};

class EscrowContract {
 public:
  explicit EscrowContract(const DeployPayload& deploy);

  // Dispatches a ledger payload sent by `sender` at tick `now`.
  ContractOutcome apply(const std::string& sender, const Payload& payload, Tick now);

  // Throws DuplicateHashId.
  Serial register_legal_media(const std::string& registrant, const HashId& hash_id, SimHashValue lshv,
                              const AddressHash& qm, Tick now);
  // Throws InvalidAmount, UnknownAddress, InsufficientFunds.
  TaskId request_detection(const std::string& requester, const AddressHash& q, Amount fee, Tick now);
  // Piracy verdicts are judged on the spot and settle immediately; a
  // Legitimate verdict registers N' provisionally and opens the window.
  std::vector<Payout> post_result(const std::string& da, TaskId task_id, const ResultRecord& record, Amount deposit,
                                  Tick now);
  ChallengeOutcome challenge(const std::string& challenger, TaskId task_id, const ChallengeEvidence& evidence,
                             Tick now);
  std::vector<Payout> settle(TaskId task_id, Tick now);
  void transfer(const std::string& from, const std::string& to, Amount amount);

  // Revoked serials never match. Throw UnknownSerial for unassigned serials.
  bool hash_id_judge(const HashId& posted, Serial n) const;
  bool lshv_judge(SimHashValue posted, Serial n, Threshold theta) const;
  bool lshv_judge(SimHashValue posted, Serial n) const { return lshv_judge(posted, n, theta_); }

  Threshold theta() const noexcept { return theta_; }
  Tick timeout() const noexcept { return timeout_; }
  const std::string& detection_agency() const noexcept { return da_; }

  Serial next_serial() const noexcept { return registry_.size() + 1; }
  const std::vector<RegistryEntry>& registry() const noexcept { return registry_; }
  const RegistryEntry& entry(Serial n) const;  // UnknownSerial
  std::optional<Serial> serial_of(const HashId& hash_id) const;  // active entries only

  const std::vector<DetectionTask>& tasks() const noexcept { return tasks_; }
  const DetectionTask& task(TaskId id) const;  // UnknownTask

  Amount balance(const std::string& who) const;
  const std::map<std::string, Amount>& balances() const noexcept { return balances_; }
  Amount escrow() const noexcept { return escrow_; }
  Amount total_supply() const noexcept { return supply_; }
  bool conserved() const;

  const std::vector<RegistryEvent>& registry_events() const noexcept { return events_; }

  // When set, request_detection rejects addresses the resolver does not know.
  void set_address_resolver(std::function<bool(const AddressHash&)> resolver) { resolver_ = std::move(resolver); }

  // {registry, tasks, balances, escrow, theta, T}
  nlohmann::ordered_json dump_state() const;

 private:
  DetectionTask& task_mut(TaskId id);
  void pay(const std::string& to, Amount amount, std::vector<Payout>& out);
  void debit(const std::string& from, Amount amount);
  const RegistryEntry& entry_or_throw(Serial n) const;

  Threshold theta_;
  Tick timeout_;
  std::string da_;
  std::vector<RegistryEntry> registry_;
  std::unordered_map<HashId, Serial> active_;
  std::vector<DetectionTask> tasks_;
  std::map<std::string, Amount> balances_;
  Amount escrow_ = 0;
  Amount supply_ = 0;
  std::vector<RegistryEvent> events_;
  std::function<bool(const AddressHash&)> resolver_;
};

}  // namespace credetect
