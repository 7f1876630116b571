#pragma once

// End-to-end actor harness: CA, media providers and one detection agency
// exchanging every protocol message through signed ledger transactions,
// driven by a logical clock.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "credetect/content_store.hpp"
#include "credetect/crypto.hpp"
#include "credetect/detector.hpp"
#include "credetect/escrow_contract.hpp"
#include "credetect/fingerprint.hpp"
#include "credetect/ledger.hpp"
#include "credetect/protocol.hpp"

namespace credetect {

enum class Role { MP, DA };
enum class Behavior { Honest, MisreportPiracy, MisreportLegitimate, NegligentVerifier };
std::string_view to_string(Role r) noexcept;
std::string_view to_string(Behavior b) noexcept;

struct ActorSpec {
  std::string identity;
  Role role = Role::MP;
  Behavior behavior = Behavior::Honest;
  Serial target = 1;  // MisreportPiracy only
  Amount initial_balance = 0;
};

struct MediaSpec {
  std::string owner;
  std::string label;
  Bytes content;
};

struct ScenarioConfig {
  std::vector<ActorSpec> actors;
  std::vector<MediaSpec> preregistered;
  std::vector<MediaSpec> media;
  unsigned theta = Threshold::kDefault;
  Tick timeout_ticks = 10;
  Amount fee = 10;
  Amount deposit = 50;
  std::uint64_t seed = 1;
  SimHashParams params;

  // Media entries take one of: "text", "path" (relative to base_dir),
  // "copy_of" (index into preregistered) or "perturb_of" with "edit_rate"
  // and optional "perturb_seed". Throws ConfigError.
  static ScenarioConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  void validate() const;  // ConfigError
};

struct ScenarioEvent {
  Tick tick = 0;
  std::string actor;
  std::string kind;
  std::string detail;

  std::string to_text() const;
};

struct InvariantResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct TaskSummary {
  TaskId task_id = 0;
  std::string medium;
  std::string requester;
  std::optional<Verdict> detected;  // what the detection engine found
  std::optional<Verdict> posted;    // what the DA put on chain
  std::optional<Serial> serial;
  std::string final_state;
  std::optional<bool> judge_passed;
  std::vector<ChallengeAttempt> challenges;
};

struct ScenarioReport {
  std::map<std::string, Amount> initial_balances;
  std::map<std::string, Amount> final_balances;
  Amount escrow = 0;
  std::vector<TaskSummary> tasks;
  std::uint64_t chain_height = 0;
  std::vector<Block> chain;
  nlohmann::ordered_json contract_state;
  std::map<std::string, std::size_t> message_counts;  // accepted transactions per payload type
  std::vector<ScenarioEvent> event_log;
  std::vector<InvariantResult> invariants;

  bool ok() const;
  nlohmann::ordered_json to_json() const;
  std::string event_log_text() const;
};

class Simulation {
 public:
  // Enrolls every actor and registers the preregistered media; the clock
  // stands at the first tick after those blocks.
  Simulation(ScenarioConfig config, const std::filesystem::path& store_root);
  ~Simulation();

  Tick now() const noexcept { return now_; }

  // Seals one block per tick, then lets actors submit settlements that have
  // come due. Throws ConfigError for ticks == 0.
  void advance_clock(Tick ticks);

  // Steps 1 to 6 of the workflow for one medium: authentication, envelope,
  // storage, request, detection and posting, and verification by the other
  // media providers. Returns the task id, or nullopt if the request itself
  // was rejected.
  std::optional<TaskId> run_task(std::size_t media_index);

  // Advances until the task is terminal.
  void run_until_settled(TaskId task_id);

  // Signs `payload` as `actor`, runs it through the ledger check and the
  // contract, and queues it only when both accept. Rejections are logged.
  bool execute(const std::string& actor, const Payload& payload);

  // Settles everything, seals the tail and evaluates the invariants.
  ScenarioReport finish();

  const Ledger& ledger() const;
  const EscrowContract& contract() const;
  const ContentStore& store() const;
  const ScenarioConfig& config() const;

 private:
  struct State;
  std::unique_ptr<State> s_;
  Tick now_ = 0;
};

// Runs every medium to settlement in order.
ScenarioReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& store_root);

}  // namespace credetect
