#pragma once

// On-disk protocol state for the command-line tool:
//   workspace.json   parameters and participant list
//   keys/<id>.json   key pairs (never copied into reports)
//   chain.jsonl      the ledger
//   store/           content store
// Contract state is never saved; it is replayed from chain.jsonl on open.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "credetect/content_store.hpp"
#include "credetect/crypto.hpp"
#include "credetect/detector.hpp"
#include "credetect/escrow_contract.hpp"
#include "credetect/ledger.hpp"

namespace credetect::cli {

struct WorkspaceParams {
  std::uint64_t seed = 1;
  unsigned theta = Threshold::kDefault;
  Tick timeout_ticks = 10;
  Amount fee = 10;
  Amount deposit = 50;
  std::vector<std::string> providers{"MP1", "MP2", "MP3"};
  Amount initial_balance = 1000;
};

struct DetectOutcome {
  TaskId task_id = 0;
  DetectionVerdict verdict;
  ResultRecord record;
  std::string state;
};

class Workspace {
 public:
  // Creates the workspace when `dir` holds none yet; otherwise `init` is
  // ignored and the saved parameters win.
  static Workspace open(const std::filesystem::path& dir, const WorkspaceParams& init);

  Serial register_media(const std::string& owner, const Bytes& media);
  DetectOutcome detect(const std::string& requester, const Bytes& media);
  ChallengeOutcome challenge(const std::string& challenger, TaskId task_id, std::optional<Serial> n);
  std::vector<Payout> settle(TaskId task_id);

  const EscrowContract& contract() const { return *contract_; }
  const Ledger& ledger() const { return *ledger_; }
  const WorkspaceParams& params() const { return params_; }
  std::filesystem::path chain_path() const { return dir_ / "chain.jsonl"; }

 private:
  Workspace() = default;

  const KeyPair& keys(const std::string& identity) const;
  void execute(const std::string& identity, const Payload& payload);  // throws on rejection
  void seal();
  void save() const;
  DetectionVerdict detect_media(const Bytes& plain, const RegistryMirror& mirror) const;

  std::filesystem::path dir_;
  WorkspaceParams params_;
  std::string da_ = "DA";
  std::vector<std::pair<std::string, KeyPair>> keys_;
  std::optional<Ledger> ledger_;
  std::optional<EscrowContract> contract_;
  std::unique_ptr<ContentStore> store_;  // heap-allocated so the resolver pointer survives moves
  Tick now_ = 0;
};

}  // namespace credetect::cli
