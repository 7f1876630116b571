#include <gtest/gtest.h>

#include <fstream>

#include "credetect/calibration.hpp"
#include "credetect/rng.hpp"
#include "credetect/simulation.hpp"
#include "test_util.hpp"

using namespace credetect;
using credetect::testing::TempDir;

namespace {

const std::filesystem::path kScenarios = CREDETECT_SCENARIO_DIR;

ScenarioConfig load(const std::string& name) {
  std::ifstream in(kScenarios / name);
  return ScenarioConfig::from_json(nlohmann::json::parse(in), kScenarios);
}

ScenarioReport run(const ScenarioConfig& cfg) {
  TempDir store("sim");
  return run_scenario(cfg, store.path());
}

const std::vector<std::string>& paragraphs() {
  static const auto p = generate_synthetic_corpus(12, 404);
  return p;
}

ScenarioConfig basic(Behavior da = Behavior::Honest, Behavior verifier = Behavior::Honest) {
  ScenarioConfig c;
  c.actors = {{"DA", Role::DA, da, 1, 1000}, {"MP1", Role::MP, verifier, 1, 100}, {"MP2", Role::MP, Behavior::Honest, 1, 100}};
  c.preregistered = {{"MP1", "original", to_bytes(paragraphs()[0])}};
  return c;
}

}  // namespace

struct Expected {
  const char* file;
  std::map<std::string, Amount> balances;
  const char* final_state;
};

void PrintTo(const Expected& e, std::ostream* os) { *os << e.file; }

class BundledScenario : public ::testing::TestWithParam<Expected> {};

std::string scenario_name(const ::testing::TestParamInfo<Expected>& info) {
  std::string n = info.param.file;
  return n.substr(0, n.find('.'));
}

TEST_P(BundledScenario, FinalBalancesAndInvariants) {
  const auto& e = GetParam();
  const auto report = run(load(e.file));
  EXPECT_TRUE(report.ok());
  for (const auto& inv : report.invariants) EXPECT_TRUE(inv.ok) << inv.name << ": " << inv.detail;
  for (const auto& [who, amount] : e.balances) EXPECT_EQ(report.final_balances.at(who), amount) << who;
  EXPECT_EQ(report.escrow, 0);
  ASSERT_FALSE(report.tasks.empty());
  for (const auto& t : report.tasks) EXPECT_EQ(t.final_state, e.final_state) << t.medium;
}

INSTANTIATE_TEST_SUITE_P(
    Scenarios, BundledScenario,
    ::testing::Values(Expected{"honest_legit.json", {{"DA", 1010}, {"MP1", 90}}, "SettledToDA"},
                      Expected{"honest_pirate.json", {{"DA", 1020}, {"MP2", 80}}, "SettledToDA"},
                      Expected{"misreport_challenged.json", {{"DA", 950}, {"MP1", 160}, {"MP2", 90}}, "SettledToMP"},
                      Expected{"misreport_timeout.json", {{"DA", 1010}, {"MP2", 90}}, "SettledToDA"},
                      Expected{"misreport_piracy.json", {{"DA", 950}, {"MP1", 150}}, "SettledToMP"}),
    scenario_name);

TEST(Simulation, HonestLegitimateRegistersNewMedium) {
  auto cfg = basic();
  cfg.media = {{"MP2", "fresh", to_bytes(paragraphs()[1])}};
  const auto r = run(cfg);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.final_balances.at("DA") - r.initial_balances.at("DA"), cfg.fee);
  EXPECT_EQ(r.final_balances.at("MP2") - r.initial_balances.at("MP2"), -cfg.fee);
  EXPECT_EQ(r.tasks[0].posted, Verdict::Legitimate);
  EXPECT_EQ(r.tasks[0].serial, 2u);
  EXPECT_EQ(r.contract_state["registry"][1]["status"], "Confirmed");
}

TEST(Simulation, MisreportedLegitimateIsChallenged) {
  auto cfg = basic(Behavior::MisreportLegitimate);
  cfg.media = {{"MP2", "copy", to_bytes(perturb_text(paragraphs()[0], 0.01, 3))}};
  const auto r = run(cfg);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.tasks[0].detected, Verdict::PartialPiracy);
  EXPECT_EQ(r.tasks[0].posted, Verdict::Legitimate);
  EXPECT_EQ(r.tasks[0].final_state, "SettledToMP");
  ASSERT_EQ(r.tasks[0].challenges.size(), 1u);
  EXPECT_EQ(r.tasks[0].challenges[0].challenger, "MP1");
  EXPECT_EQ(r.final_balances.at("MP1") - r.initial_balances.at("MP1"), cfg.fee + cfg.deposit);
  EXPECT_EQ(r.final_balances.at("DA") - r.initial_balances.at("DA"), -cfg.deposit);
}

TEST(Simulation, NegligentVerifierLetsDaKeepFee) {
  auto cfg = basic(Behavior::MisreportLegitimate, Behavior::NegligentVerifier);
  cfg.media = {{"MP2", "copy", to_bytes(perturb_text(paragraphs()[0], 0.01, 3))}};
  const auto r = run(cfg);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.tasks[0].final_state, "SettledToDA");
  EXPECT_TRUE(r.tasks[0].challenges.empty());
  EXPECT_EQ(r.final_balances.at("DA") - r.initial_balances.at("DA"), cfg.fee);
}

TEST(Simulation, DeterministicReports) {
  auto cfg = load("misreport_challenged.json");
  const auto a = run(cfg), b = run(cfg);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.event_log_text(), b.event_log_text());
  EXPECT_EQ(export_chain(a.chain), export_chain(b.chain));
}

TEST(Simulation, AdvanceClockSealsOneBlockPerTick) {
  TempDir store("sim");
  auto cfg = basic();
  cfg.media = {{"MP2", "fresh", to_bytes(paragraphs()[2])}};
  Simulation sim(cfg, store.path());
  const auto h = sim.ledger().height();
  sim.advance_clock(1);
  EXPECT_EQ(sim.ledger().height(), h + 1);
  sim.advance_clock(3);
  EXPECT_EQ(sim.ledger().height(), h + 4);
  EXPECT_CODE(sim.advance_clock(0), ConfigError);

  const auto task = sim.run_task(0);
  ASSERT_TRUE(task.has_value());
  sim.advance_clock(1);
  EXPECT_EQ(sim.contract().task(*task).state, TaskState::ResultPosted);
  sim.advance_clock(cfg.timeout_ticks + 1);
  EXPECT_EQ(sim.contract().task(*task).state, TaskState::SettledToDA);
  EXPECT_TRUE(sim.finish().ok());
}

TEST(Simulation, RandomInterleavingsConserveFunds) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    DeterministicRng rng(seed);
    ScenarioConfig cfg;
    const Behavior da_behaviors[] = {Behavior::Honest, Behavior::MisreportLegitimate, Behavior::MisreportPiracy};
    cfg.actors = {{"DA", Role::DA, da_behaviors[rng.uniform(3)], 1, 1000},
                  {"MP1", Role::MP, Behavior::Honest, 1, 200},
                  {"MP2", Role::MP, rng.uniform(2) ? Behavior::Honest : Behavior::NegligentVerifier, 1, 200},
                  {"MP3", Role::MP, Behavior::Honest, 1, 200}};
    cfg.seed = seed;
    cfg.timeout_ticks = 1 + rng.uniform(6);
    cfg.preregistered = {{"MP1", "a", to_bytes(paragraphs()[0])}, {"MP3", "b", to_bytes(paragraphs()[1])}};
    for (int i = 0; i < 6; ++i) {
      const auto& base = paragraphs()[rng.uniform(4)];
      const std::string owner = rng.uniform(2) ? "MP2" : "MP3";
      switch (rng.uniform(3)) {
        case 0: cfg.media.push_back({owner, "m", to_bytes(base)}); break;
        case 1: cfg.media.push_back({owner, "m", to_bytes(perturb_text(base, 0.01, rng.next()))}); break;
        default: cfg.media.push_back({owner, "m", to_bytes(paragraphs()[4 + i])});
      }
    }
    TempDir store("sim");
    Simulation sim(cfg, store.path());
    for (std::size_t i = 0; i < cfg.media.size(); ++i) {
      sim.run_task(i);
      if (rng.uniform(2)) sim.advance_clock(1 + rng.uniform(cfg.timeout_ticks + 2));
      ASSERT_TRUE(sim.contract().conserved());
    }
    const auto report = sim.finish();
    for (const auto& inv : report.invariants) EXPECT_TRUE(inv.ok) << "seed " << seed << " " << inv.name << ": " << inv.detail;
    EXPECT_EQ(report.escrow, 0);
    Amount total = 0;
    for (const auto& [_, b] : report.final_balances) total += b;
    EXPECT_EQ(total, 1000 + 3 * 200);
  }
}

TEST(Simulation, PlaintextNeverLeavesTheDa) {
  auto cfg = basic();
  const std::string secret = paragraphs()[5];
  cfg.media = {{"MP2", "fresh", to_bytes(secret)}};
  TempDir store("sim");
  const auto r = run_scenario(cfg, store.path());
  EXPECT_EQ(r.event_log_text().find(secret.substr(0, 40)), std::string::npos);
  EXPECT_EQ(export_chain(r.chain).find(secret.substr(0, 40)), std::string::npos);
  for (const auto& e : std::filesystem::directory_iterator(store.path())) {
    std::ifstream in(e.path(), std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(bytes.find(secret.substr(0, 40)), std::string::npos) << e.path();
  }
}

TEST(ScenarioConfig, Validation) {
  auto two_da = basic();
  two_da.actors.push_back({"DA2", Role::DA, Behavior::Honest, 1, 0});
  EXPECT_CODE(two_da.validate(), ConfigError);

  auto no_da = basic();
  no_da.actors.erase(no_da.actors.begin());
  EXPECT_CODE(no_da.validate(), ConfigError);

  auto ca = basic();
  ca.actors[1].identity = "CA";
  EXPECT_CODE(ca.validate(), ConfigError);

  auto mp_misreport = basic();
  mp_misreport.actors[1].behavior = Behavior::MisreportPiracy;
  EXPECT_CODE(mp_misreport.validate(), ConfigError);

  auto da_owner = basic();
  da_owner.media = {{"DA", "x", to_bytes("some text")}};
  EXPECT_CODE(da_owner.validate(), ConfigError);

  EXPECT_NO_THROW(basic().validate());
}

TEST(ScenarioConfig, FromJsonErrors) {
  auto j = nlohmann::json::parse(R"({
    "actors": [{"identity": "DA", "role": "DA", "behavior": "Honest", "initial_balance": 10},
               {"identity": "MP1", "role": "MP", "behavior": "Honest", "initial_balance": 10}],
    "preregistered": [],
    "media": [{"owner": "MP1", "label": "gone", "path": "does/not/exist.txt"}]
  })");
  EXPECT_CODE(ScenarioConfig::from_json(j, kScenarios), ConfigError);
  j["media"][0] = {{"owner", "MP1"}, {"label", "c"}, {"copy_of", 3}};
  EXPECT_CODE(ScenarioConfig::from_json(j, kScenarios), ConfigError);
  j["media"][0] = {{"owner", "MP1"}, {"label", "t"}, {"text", "inline text body"}};
  const auto cfg = ScenarioConfig::from_json(j, kScenarios);
  EXPECT_EQ(to_string(cfg.media[0].content), "inline text body");
  j["actors"][0]["role"] = "Referee";
  EXPECT_CODE(ScenarioConfig::from_json(j, kScenarios), ConfigError);
}
