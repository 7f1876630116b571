#include "credetect/escrow_contract.hpp"

#include <type_traits>

#include "credetect/errors.hpp"

namespace credetect {

using nlohmann::ordered_json;

std::string_view to_string(TaskState s) noexcept {
  switch (s) {
    case TaskState::Requested: return "Requested";
    case TaskState::ResultPosted: return "ResultPosted";
    case TaskState::Challenged: return "Challenged";
    case TaskState::SettledToDA: return "SettledToDA";
    case TaskState::SettledToMP: return "SettledToMP";
  }
  return "?";
}

std::string_view to_string(RegistryStatus s) noexcept {
  switch (s) {
    case RegistryStatus::Confirmed: return "Confirmed";
    case RegistryStatus::Provisional: return "Provisional";
    case RegistryStatus::Revoked: return "Revoked";
  }
  return "?";
}

std::string_view to_string(RegistryEventKind k) noexcept {
  switch (k) {
    case RegistryEventKind::Registered: return "Registered";
    case RegistryEventKind::Confirmed: return "Confirmed";
    case RegistryEventKind::Revoked: return "Revoked";
  }
  return "?";
}

EscrowContract::EscrowContract(const DeployPayload& deploy)
    : theta_(deploy.theta), timeout_(deploy.timeout_ticks), da_(deploy.detection_agency) {
  if (timeout_ == 0) throw Error(ErrorCode::ConfigError, "timeout T must be at least one tick");
  if (da_.empty()) throw Error(ErrorCode::ConfigError, "deployment names no detection agency");
  for (const auto& [who, amount] : deploy.allocations) {
    if (amount < 0) throw Error(ErrorCode::InvalidAmount, "negative allocation for '" + who + "'");
    if (amount > INT64_MAX - supply_) throw Error(ErrorCode::InvalidAmount, "total allocation overflows");
    supply_ += amount;
    balances_[who] = amount;
  }
}

ContractOutcome EscrowContract::apply(const std::string& sender, const Payload& payload, Tick now) {
  ContractOutcome out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DeployPayload>) {
          throw Error(ErrorCode::Unauthorized, "contract already deployed");
        } else if constexpr (std::is_same_v<T, EnrollPayload>) {
          // Identity bookkeeping lives in the ledger.
        } else if constexpr (std::is_same_v<T, RegisterPayload>) {
          out.serial = register_legal_media(sender, p.hash_id, p.lshv, p.qm, now);
        } else if constexpr (std::is_same_v<T, RequestDetectionPayload>) {
          out.task_id = request_detection(sender, p.q, p.fee, now);
        } else if constexpr (std::is_same_v<T, PostResultPayload>) {
          out.task_id = p.task_id;
          out.payouts = post_result(sender, p.task_id, p.record, p.deposit, now);
          if (p.record.verdict == Verdict::Legitimate && task(p.task_id).state == TaskState::ResultPosted)
            out.serial = p.record.serial;
        } else if constexpr (std::is_same_v<T, ChallengePayload>) {
          out.task_id = p.task_id;
          auto c = challenge(sender, p.task_id, p.evidence, now);
          out.challenge_succeeded = c.succeeded;
          out.payouts = std::move(c.payouts);
        } else if constexpr (std::is_same_v<T, SettlePayload>) {
          out.task_id = p.task_id;
          out.payouts = settle(p.task_id, now);
        } else if constexpr (std::is_same_v<T, TransferPayload>) {
          transfer(sender, p.to, p.amount);
        }
      },
      payload);
  return out;
}

Serial EscrowContract::register_legal_media(const std::string& registrant, const HashId& hash_id, SimHashValue lshv,
                                            const AddressHash& qm, Tick now) {
  if (active_.count(hash_id))
    throw Error(ErrorCode::DuplicateHashId, hash_id.hex() + " already registered as N=" +
                                                std::to_string(active_.at(hash_id)));
  const Serial n = next_serial();
  registry_.push_back({{n, hash_id, lshv, qm}, RegistryStatus::Confirmed, registrant, std::nullopt, now});
  active_.emplace(hash_id, n);
  events_.push_back({RegistryEventKind::Registered, n});
  return n;
}

TaskId EscrowContract::request_detection(const std::string& requester, const AddressHash& q, Amount fee, Tick now) {
  if (fee <= 0) throw Error(ErrorCode::InvalidAmount, "service fee must be positive");
  if (resolver_ && !resolver_(q)) throw Error(ErrorCode::UnknownAddress, q.hex() + " is not in the content store");
  if (balance(requester) < fee)
    throw Error(ErrorCode::InsufficientFunds, "'" + requester + "' cannot pay fee " + std::to_string(fee));
  debit(requester, fee);
  DetectionTask t;
  t.id = tasks_.size() + 1;
  t.requester = requester;
  t.q = q;
  t.fee = fee;
  t.requested_at = now;
  t.deadline = now + timeout_;
  tasks_.push_back(std::move(t));
  return tasks_.back().id;
}

std::vector<Payout> EscrowContract::post_result(const std::string& da, TaskId task_id, const ResultRecord& record,
                                                Amount deposit, Tick now) {
  if (da != da_) throw Error(ErrorCode::Unauthorized, "only the detection agency posts results");
  DetectionTask& t = task_mut(task_id);
  if (t.state != TaskState::Requested)
    throw Error(ErrorCode::WrongState, "task " + std::to_string(task_id) + " is " + std::string(to_string(t.state)));
  if (now > t.deadline) throw Error(ErrorCode::PastDeadline, "result for task " + std::to_string(task_id) + " is late");
  if (deposit <= 0) throw Error(ErrorCode::InvalidAmount, "deposit must be positive");
  if (!record.well_formed()) throw Error(ErrorCode::MalformedRecord, "record shape does not match its verdict");
  if (record.qm != t.q) throw Error(ErrorCode::MalformedRecord, "record QM is not the task's address");
  if (record.verdict == Verdict::Legitimate) {
    if (record.serial != next_serial())
      throw Error(ErrorCode::MalformedRecord,
                  "N'=" + std::to_string(record.serial) + " but next serial is " + std::to_string(next_serial()));
  } else {
    entry_or_throw(record.serial);
  }
  if (balance(da) < deposit)
    throw Error(ErrorCode::InsufficientFunds, "'" + da + "' cannot pay deposit " + std::to_string(deposit));

  debit(da, deposit);
  t.deposit = deposit;
  t.result = record;
  t.posted_at = now;
  t.deadline = now + timeout_;
  t.state = TaskState::ResultPosted;

  std::vector<Payout> payouts;
  auto finish = [&](bool to_da) {
    pay(to_da ? da_ : t.requester, t.fee + t.deposit, payouts);
    t.state = to_da ? TaskState::SettledToDA : TaskState::SettledToMP;
    t.settled_at = now;
  };

  switch (record.verdict) {
    case Verdict::CompletePiracy:
      t.judge_passed = hash_id_judge(*record.hash_id, record.serial);
      finish(*t.judge_passed);
      break;
    case Verdict::PartialPiracy:
      t.judge_passed = lshv_judge(*record.lshv, record.serial, theta_);
      finish(*t.judge_passed);
      break;
    case Verdict::Legitimate:
      if (active_.count(*record.hash_id)) {
        // The contract can see for itself that this exact medium is registered.
        t.judge_passed = false;
        finish(false);
        break;
      }
      registry_.push_back({{record.serial, *record.hash_id, *record.lshv, record.qm},
                           RegistryStatus::Provisional,
                           t.requester,
                           task_id,
                           now});
      active_.emplace(*record.hash_id, record.serial);
      events_.push_back({RegistryEventKind::Registered, record.serial});
      break;
  }
  return payouts;
}

ChallengeOutcome EscrowContract::challenge(const std::string& challenger, TaskId task_id,
                                           const ChallengeEvidence& evidence, Tick now) {
  DetectionTask& t = task_mut(task_id);
  if (challenger == da_) throw Error(ErrorCode::Unauthorized, "the detection agency cannot challenge its own result");
  if (t.state != TaskState::ResultPosted || !t.result || t.result->verdict != Verdict::Legitimate)
    throw Error(ErrorCode::WrongState, "task " + std::to_string(task_id) + " has no open Legitimate verdict");
  if (now > t.deadline)
    throw Error(ErrorCode::PastDeadline, "challenge window of task " + std::to_string(task_id) + " closed at tick " +
                                             std::to_string(t.deadline));
  for (const auto& c : t.challenges)
    if (c.challenger == challenger)
      throw Error(ErrorCode::DuplicateChallenge, "'" + challenger + "' already challenged task " + std::to_string(task_id));
  if (evidence.n_prime != t.result->serial)
    throw Error(ErrorCode::EvidenceMismatch, "N'=" + std::to_string(evidence.n_prime) + " is not the task's serial " +
                                                 std::to_string(t.result->serial));
  entry_or_throw(evidence.n);
  if (evidence.n >= evidence.n_prime)
    throw Error(ErrorCode::EvidenceMismatch, "N must precede N'");

  const RegistryEntry& challenged = entry_or_throw(evidence.n_prime);
  const bool success = hash_id_judge(challenged.record.hash_id, evidence.n) ||
                       lshv_judge(challenged.record.lshv, evidence.n, theta_);

  ChallengeOutcome out;
  out.succeeded = success;
  t.challenges.push_back({challenger, evidence, success, now});
  if (!success) return out;  // the contract does nothing

  t.state = TaskState::Challenged;
  RegistryEntry& revoked = registry_[evidence.n_prime - 1];
  revoked.status = RegistryStatus::Revoked;
  active_.erase(revoked.record.hash_id);
  events_.push_back({RegistryEventKind::Revoked, evidence.n_prime});
  pay(challenger, t.fee + t.deposit, out.payouts);
  t.state = TaskState::SettledToMP;
  t.settled_at = now;
  return out;
}

std::vector<Payout> EscrowContract::settle(TaskId task_id, Tick now) {
  DetectionTask& t = task_mut(task_id);
  if (is_terminal(t.state))
    throw Error(ErrorCode::WrongState, "task " + std::to_string(task_id) + " already " + std::string(to_string(t.state)));
  if (now <= t.deadline)
    throw Error(ErrorCode::NotYetDue, "task " + std::to_string(task_id) + " is due after tick " + std::to_string(t.deadline));

  std::vector<Payout> payouts;
  if (t.state == TaskState::Requested) {
    // No result arrived in time: the requester gets the fee back.
    pay(t.requester, t.fee, payouts);
    t.state = TaskState::SettledToMP;
  } else {
    // An unchallenged Legitimate verdict: everyone is taken to agree.
    pay(da_, t.fee + t.deposit, payouts);
    t.state = TaskState::SettledToDA;
    RegistryEntry& e = registry_[t.result->serial - 1];
    e.status = RegistryStatus::Confirmed;
    events_.push_back({RegistryEventKind::Confirmed, e.record.serial});
  }
  t.settled_at = now;
  return payouts;
}

void EscrowContract::transfer(const std::string& from, const std::string& to, Amount amount) {
  if (amount <= 0) throw Error(ErrorCode::InvalidAmount, "transfer amount must be positive");
  if (to.empty()) throw Error(ErrorCode::UnknownAddress, "empty recipient");
  if (balance(from) < amount) throw Error(ErrorCode::InsufficientFunds, "'" + from + "' cannot send " + std::to_string(amount));
  balances_[from] -= amount;
  balances_[to] += amount;
}

bool EscrowContract::hash_id_judge(const HashId& posted, Serial n) const {
  const RegistryEntry& e = entry_or_throw(n);
  return e.status != RegistryStatus::Revoked && e.record.hash_id == posted;
}

bool EscrowContract::lshv_judge(SimHashValue posted, Serial n, Threshold theta) const {
  const RegistryEntry& e = entry_or_throw(n);
  return e.status != RegistryStatus::Revoked && theta.admits(hamming_distance(posted, e.record.lshv));
}

const RegistryEntry& EscrowContract::entry(Serial n) const { return entry_or_throw(n); }

const RegistryEntry& EscrowContract::entry_or_throw(Serial n) const {
  if (n == 0 || n > registry_.size()) throw Error(ErrorCode::UnknownSerial, "N=" + std::to_string(n));
  return registry_[n - 1];
}

std::optional<Serial> EscrowContract::serial_of(const HashId& hash_id) const {
  auto it = active_.find(hash_id);
  if (it == active_.end()) return std::nullopt;
  return it->second;
}

const DetectionTask& EscrowContract::task(TaskId id) const {
  if (id == 0 || id > tasks_.size()) throw Error(ErrorCode::UnknownTask, "task " + std::to_string(id));
  return tasks_[id - 1];
}

DetectionTask& EscrowContract::task_mut(TaskId id) { return const_cast<DetectionTask&>(task(id)); }

Amount EscrowContract::balance(const std::string& who) const {
  auto it = balances_.find(who);
  return it == balances_.end() ? 0 : it->second;
}

void EscrowContract::debit(const std::string& from, Amount amount) {
  balances_[from] -= amount;
  escrow_ += amount;
}

void EscrowContract::pay(const std::string& to, Amount amount, std::vector<Payout>& out) {
  escrow_ -= amount;
  balances_[to] += amount;
  out.push_back({to, amount});
}

bool EscrowContract::conserved() const {
  Amount total = escrow_;
  for (const auto& [_, b] : balances_) total += b;
  return total == supply_ && escrow_ >= 0;
}

ordered_json EscrowContract::dump_state() const {
  ordered_json registry = ordered_json::array();
  for (const auto& e : registry_) {
    ordered_json j = to_json(e.record);
    j["status"] = std::string(to_string(e.status));
    j["registrant"] = e.registrant;
    if (e.origin_task) j["origin_task"] = *e.origin_task;
    j["registered_at"] = e.registered_at;
    registry.push_back(std::move(j));
  }
  ordered_json tasks = ordered_json::array();
  for (const auto& t : tasks_) {
    ordered_json j;
    j["task_id"] = t.id;
    j["requester"] = t.requester;
    j["q"] = t.q.hex();
    j["fee"] = t.fee;
    j["deposit"] = t.deposit;
    j["state"] = std::string(to_string(t.state));
    if (t.result) j["result"] = to_json(*t.result);
    j["requested_at"] = t.requested_at;
    j["deadline"] = t.deadline;
    if (t.judge_passed) j["judge_passed"] = *t.judge_passed;
    ordered_json challenges = ordered_json::array();
    for (const auto& c : t.challenges)
      challenges.push_back({{"challenger", c.challenger},
                            {"n_prime", c.evidence.n_prime},
                            {"n", c.evidence.n},
                            {"succeeded", c.succeeded},
                            {"at", c.at}});
    j["challenges"] = std::move(challenges);
    if (t.settled_at) j["settled_at"] = *t.settled_at;
    tasks.push_back(std::move(j));
  }
  ordered_json balances = ordered_json::object();
  for (const auto& [who, b] : balances_) balances[who] = b;

  ordered_json j;
  j["registry"] = std::move(registry);
  j["tasks"] = std::move(tasks);
  j["balances"] = std::move(balances);
  j["escrow"] = escrow_;
  j["theta"] = theta_.theta();
  j["T"] = timeout_;
  return j;
}

}  // namespace credetect
