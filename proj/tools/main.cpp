// credetect: calibration, registration/detection against a local workspace,
// scenario runs and chain inspection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "credetect/calibration.hpp"
#include "credetect/errors.hpp"
#include "credetect/ledger.hpp"
#include "credetect/simulation.hpp"
#include "workspace.hpp"

namespace fs = std::filesystem;
using namespace credetect;

namespace {

constexpr int kExitFailure = 1;  // verification or invariant failure
constexpr int kExitError = 2;    // bad input or runtime error

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
}

struct Common {
  std::uint64_t seed = 1;
  unsigned theta = Threshold::kDefault;
  Tick timeout_ticks = 10;
  Amount fee = 10;
  Amount deposit = 50;
  std::string out_dir = ".";

  cli::WorkspaceParams workspace() const {
    cli::WorkspaceParams p;
    p.seed = seed;
    p.theta = theta;
    p.timeout_ticks = timeout_ticks;
    p.fee = fee;
    p.deposit = deposit;
    return p;
  }
};

void add_protocol_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for keys and envelopes");
  cmd->add_option("--theta", c.theta, "Hamming threshold (new workspaces only)")->check(CLI::Range(0u, 64u));
  cmd->add_option("--timeout-ticks", c.timeout_ticks, "Challenge window T in ticks (new workspaces only)");
  cmd->add_option("--fee", c.fee, "Service fee f_i (new workspaces only)");
  cmd->add_option("--deposit", c.deposit, "DA deposit f_DA (new workspaces only)");
  cmd->add_option("--out-dir", c.out_dir, "Workspace directory");
}

nlohmann::ordered_json verdict_json(const cli::DetectOutcome& d) {
  nlohmann::ordered_json j;
  j["task_id"] = d.task_id;
  j["verdict"] = std::string(to_string(d.verdict.kind));
  j["serial"] = d.record.serial;
  if (d.verdict.kind == Verdict::PartialPiracy) j["distance"] = d.verdict.distance.value;
  j["hash_id"] = d.verdict.fingerprint.hash_id.hex();
  j["lshv"] = d.verdict.fingerprint.lshv.hex();
  j["state"] = d.state;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copyright registration, piracy detection and arbitration on a simulated ledger"};
  app.require_subcommand(1);
  Common c;

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit the distance/similarity regression and pick theta");
  std::string corpus_dir;
  CalibrationOptions cal_opts;
  std::size_t synthetic = kBundledCorpusSize;
  cal->add_option("--corpus", corpus_dir, "Directory of UTF-8 .txt files (default: bundled synthetic corpus)");
  cal->add_option("--n-base", cal_opts.n_base, "Unmodified sample pairs");
  cal->add_option("--n-perturbed", cal_opts.n_perturbed, "Enhanced sample pairs");
  cal->add_option("--seed", cal_opts.seed, "Sampling and perturbation seed");
  cal->add_option("--min-similarity", cal_opts.min_pirate_similarity, "Minimum similarity still judged piracy");
  cal->add_option("--max-edit-rate", cal_opts.max_edit_rate, "Upper edit rate for enhanced copies");
  cal->add_option("--shingle-width", cal_opts.params.shingle_width, "SimHash shingle width");
  cal->add_option("--synthetic-size", synthetic, "Paragraphs in the bundled corpus");
  cal->add_option("--out-dir", c.out_dir, "Where samples.csv, model.json and threshold.json go");

  // make-corpus
  auto* mk = app.add_subcommand("make-corpus", "Write the bundled synthetic corpus as .txt files");
  std::size_t corpus_count = kBundledCorpusSize;
  std::uint64_t corpus_seed = kBundledCorpusSeed;
  mk->add_option("--count", corpus_count, "Paragraph count");
  mk->add_option("--seed", corpus_seed, "Generator seed");
  mk->add_option("--out-dir", c.out_dir, "Target directory")->required();

  // register / detect / challenge / settle
  std::string identity, media_path;
  auto* reg = app.add_subcommand("register", "Register a legal medium in the workspace registry");
  add_protocol_flags(reg, c);
  reg->add_option("--owner", identity, "Registering media provider")->required();
  reg->add_option("file", media_path, "Medium to register")->required()->check(CLI::ExistingFile);

  auto* det = app.add_subcommand("detect", "Submit a medium for detection by the DA");
  add_protocol_flags(det, c);
  det->add_option("--requester", identity, "Requesting media provider")->required();
  det->add_option("file", media_path, "Medium to check")->required()->check(CLI::ExistingFile);

  TaskId task_id = 0;
  std::optional<Serial> evidence_n;
  auto* chal = app.add_subcommand("challenge", "Challenge a Legitimate verdict with evidence {N', N}");
  add_protocol_flags(chal, c);
  chal->add_option("--challenger", identity, "Challenging media provider")->required();
  chal->add_option("--task", task_id, "Task id")->required();
  chal->add_option("--n", evidence_n, "Earlier serial N (default: closest registered match)");

  auto* set = app.add_subcommand("settle", "Advance past the task deadline and settle it");
  add_protocol_flags(set, c);
  set->add_option("--task", task_id, "Task id")->required();

  // run-scenario
  std::string config_path;
  auto* run = app.add_subcommand("run-scenario", "Run a scenario config end to end");
  run->add_option("config", config_path, "Scenario JSON")->required();
  run->add_option("--out-dir", c.out_dir, "Where scenario_report.json, event_log.txt and chain.jsonl go");
  run->add_option("--seed", c.seed, "Override the config seed");

  // inspect-chain
  std::string chain_path;
  bool verify = false;
  auto* insp = app.add_subcommand("inspect-chain", "Summarize a chain.jsonl file");
  insp->add_option("chain", chain_path, "Chain file (default: <out-dir>/chain.jsonl)");
  insp->add_option("--out-dir", c.out_dir, "Workspace directory");
  insp->add_flag("--verify", verify, "Validate hashes, links, signatures and nonces");

  // dump-state
  auto* dump = app.add_subcommand("dump-state", "Print contract state replayed from a chain");
  dump->add_option("chain", chain_path, "Chain file (default: <out-dir>/chain.jsonl)");
  dump->add_option("--out-dir", c.out_dir, "Workspace directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cal->parsed()) {
      std::vector<std::string> corpus = corpus_dir.empty() ? generate_synthetic_corpus(synthetic, kBundledCorpusSeed)
                                                           : load_corpus(corpus_dir);
      const CalibrationResult r = calibrate(corpus, cal_opts);
      const fs::path out(c.out_dir);
      const auto samples = r.samples();
      write_file(out / "samples.csv", samples_csv(samples));
      write_file(out / "model.json", model_json(r.model));
      nlohmann::ordered_json th;
      th["theta"] = r.threshold.theta();
      th["min_pirate_similarity"] = cal_opts.min_pirate_similarity;
      write_file(out / "threshold.json", th.dump(2) + "\n");

      std::printf("samples      %zu (%zu base + %zu enhanced)\n", samples.size(), cal_opts.n_base, cal_opts.n_perturbed);
      std::printf("model        similarity = %.6f * L + %.6f  (r^2 %.4f)\n", r.model.slope, r.model.intercept,
                  r.model.r_squared);
      std::printf("pearson r    %.4f\n", r.pearson_r);
      std::printf("theta        %u at similarity >= %.2f\n", r.threshold.theta(), cal_opts.min_pirate_similarity);
      std::printf("deciles\n");
      for (const auto& b : distance_deciles(samples))
        std::printf("  L %2u..%-2u  n=%-5zu mean similarity %.4f\n", b.min_distance, b.max_distance, b.count,
                    b.mean_similarity);
      return 0;
    }
    if (mk->parsed()) {
      write_corpus(c.out_dir, generate_synthetic_corpus(corpus_count, corpus_seed));
      std::printf("wrote %zu paragraphs to %s\n", corpus_count, c.out_dir.c_str());
      return 0;
    }
    if (reg->parsed()) {
      auto ws = cli::Workspace::open(c.out_dir, c.workspace());
      const Serial n = ws.register_media(identity, to_bytes(read_file(media_path)));
      std::printf("registered N=%llu\n", static_cast<unsigned long long>(n));
      return 0;
    }
    if (det->parsed()) {
      auto ws = cli::Workspace::open(c.out_dir, c.workspace());
      std::cout << verdict_json(ws.detect(identity, to_bytes(read_file(media_path)))).dump(2) << "\n";
      return 0;
    }
    if (chal->parsed()) {
      auto ws = cli::Workspace::open(c.out_dir, c.workspace());
      const auto out = ws.challenge(identity, task_id, evidence_n);
      std::printf("challenge %s\n", out.succeeded ? "succeeded" : "failed (contract does nothing)");
      for (const auto& p : out.payouts) std::printf("  %s +%lld\n", p.to.c_str(), static_cast<long long>(p.amount));
      return 0;
    }
    if (set->parsed()) {
      auto ws = cli::Workspace::open(c.out_dir, c.workspace());
      const auto deltas = ws.settle(task_id);
      std::printf("task %llu %s\n", static_cast<unsigned long long>(task_id),
                  std::string(to_string(ws.contract().task(task_id).state)).c_str());
      for (const auto& p : deltas) std::printf("  %s %+lld\n", p.to.c_str(), static_cast<long long>(p.amount));
      return 0;
    }
    if (run->parsed()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(config_path));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, config_path + ": " + e.what());
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
      }
      ScenarioConfig cfg = ScenarioConfig::from_json(j, fs::path(config_path).parent_path());
      if (run->count("--seed")) cfg.seed = c.seed;
      const fs::path out(c.out_dir);
      const ScenarioReport r = run_scenario(cfg, out / "store");
      write_file(out / "scenario_report.json", r.to_json().dump(2) + "\n");
      write_file(out / "event_log.txt", r.event_log_text());
      write_file(out / "chain.jsonl", export_chain(r.chain));
      write_file(out / "state.json", r.contract_state.dump(2) + "\n");

      for (const auto& t : r.tasks)
        std::printf("task %llu %-16s detected=%-14s posted=%-14s -> %s\n", static_cast<unsigned long long>(t.task_id),
                    t.medium.c_str(), t.detected ? std::string(to_string(*t.detected)).c_str() : "-",
                    t.posted ? std::string(to_string(*t.posted)).c_str() : "-", t.final_state.c_str());
      for (const auto& [who, bal] : r.final_balances)
        std::printf("balance %-8s %lld (start %lld)\n", who.c_str(), static_cast<long long>(bal),
                    static_cast<long long>(r.initial_balances.count(who) ? r.initial_balances.at(who) : 0));
      for (const auto& inv : r.invariants)
        std::printf("%s %s%s%s\n", inv.ok ? "ok  " : "FAIL", inv.name.c_str(), inv.ok ? "" : ": ", inv.detail.c_str());
      return r.ok() ? 0 : kExitFailure;
    }
    if (insp->parsed() || dump->parsed()) {
      const fs::path path = chain_path.empty() ? fs::path(c.out_dir) / "chain.jsonl" : fs::path(chain_path);
      const std::string text = read_file(path);
      if (insp->parsed() && verify) {
        const ChainCheck check = verify_chain_text(text);
        if (!check.ok()) {
          const auto& v = *check.violation;
          std::printf("verify FAILED at block %llu%s: %s\n", static_cast<unsigned long long>(v.block),
                      v.tx ? (" tx " + std::to_string(*v.tx)).c_str() : "", v.reason.c_str());
          return kExitFailure;
        }
      }
      const auto blocks = import_chain(text);
      if (dump->parsed()) {
        std::cout << replay_contract(blocks).dump_state().dump(2) << "\n";
        return 0;
      }
      std::size_t total = 0;
      for (const auto& b : blocks) {
        std::printf("block %llu t=%llu txs=%zu hash=%s\n", static_cast<unsigned long long>(b.height),
                    static_cast<unsigned long long>(b.timestamp), b.transactions.size(), b.block_hash.hex().c_str());
        for (std::size_t i = 0; i < b.transactions.size(); ++i) {
          const auto& tx = b.transactions[i];
          if (b.height == 0) continue;  // the deploy is summarized below
          ++total;
          std::printf("  [%zu] %-10s %s nonce=%llu\n", i, tx.sender.c_str(), std::string(payload_type(tx.payload)).c_str(),
                      static_cast<unsigned long long>(tx.nonce));
        }
      }
      std::printf("%zu blocks, %zu transactions after genesis\n", blocks.size(), total);
      if (verify) std::printf("verify OK\n");
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return 0;
}
