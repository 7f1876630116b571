#include "credetect/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include "credetect/errors.hpp"

namespace credetect {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(Role r) noexcept { return r == Role::DA ? "DA" : "MP"; }

std::string_view to_string(Behavior b) noexcept {
  switch (b) {
    case Behavior::Honest: return "Honest";
    case Behavior::MisreportPiracy: return "MisreportPiracy";
    case Behavior::MisreportLegitimate: return "MisreportLegitimate";
    case Behavior::NegligentVerifier: return "NegligentVerifier";
  }
  return "?";
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

// splitmix64 finalizer; turns (seed, domain, index) into independent streams.
std::uint64_t derive(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (domain * 0x100000001b3ull + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string short_hex(const std::string& hex) { return hex.substr(0, 12); }

Behavior behavior_from_string(const std::string& s) {
  for (auto b : {Behavior::Honest, Behavior::MisreportPiracy, Behavior::MisreportLegitimate, Behavior::NegligentVerifier})
    if (to_string(b) == s) return b;
  config_error("unknown behavior '" + s + "'");
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string(key) + ": " + e.what());
  }
}

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) config_error("cannot read media file " + p.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

MediaSpec parse_media(const nlohmann::json& j, const fs::path& base, const std::vector<MediaSpec>& prereg,
                      const std::string& default_label, std::uint64_t seed, std::size_t index) {
  if (!j.is_object()) config_error(default_label + ": expected an object");
  MediaSpec m;
  m.owner = field_or<std::string>(j, "owner", "");
  m.label = field_or<std::string>(j, "label", default_label);
  const int sources = j.contains("text") + j.contains("path") + j.contains("copy_of") + j.contains("perturb_of");
  if (sources != 1) config_error(m.label + ": exactly one of text, path, copy_of, perturb_of is required");
  if (j.contains("text")) {
    m.content = to_bytes(field_or<std::string>(j, "text", ""));
  } else if (j.contains("path")) {
    m.content = read_file(base / field_or<std::string>(j, "path", ""));
  } else {
    const auto key = j.contains("copy_of") ? "copy_of" : "perturb_of";
    const auto src = field_or<std::size_t>(j, key, 0);
    if (src >= prereg.size()) config_error(m.label + ": " + key + " refers to a missing preregistered medium");
    m.content = prereg[src].content;
    if (j.contains("perturb_of")) {
      const double rate = field_or<double>(j, "edit_rate", 0.02);
      const auto pseed = field_or<std::uint64_t>(j, "perturb_seed", derive(seed, 7, index));
      try {
        m.content = to_bytes(perturb_text(to_string(m.content), rate, pseed));
      } catch (const Error& e) {
        config_error(m.label + ": " + e.what());
      }
    }
  }
  return m;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) config_error("scenario config must be a JSON object");
  ScenarioConfig c;
  c.seed = field_or<std::uint64_t>(j, "seed", c.seed);
  c.theta = field_or<unsigned>(j, "theta", c.theta);
  c.timeout_ticks = field_or<Tick>(j, "timeout_ticks", c.timeout_ticks);
  c.fee = field_or<Amount>(j, "fee", c.fee);
  c.deposit = field_or<Amount>(j, "deposit", c.deposit);
  c.params.shingle_width = field_or<unsigned>(j, "shingle_width", c.params.shingle_width);
  if (j.contains("weighting")) {
    try {
      c.params.weighting = weighting_from_string(field_or<std::string>(j, "weighting", ""));
    } catch (const Error& e) {
      config_error(e.what());
    }
  }

  if (!j.contains("actors") || !j["actors"].is_array()) config_error("actors: expected an array");
  for (const auto& a : j["actors"]) {
    if (!a.is_object()) config_error("actor: expected an object");
    ActorSpec s;
    s.identity = field_or<std::string>(a, "identity", "");
    const auto role = field_or<std::string>(a, "role", "MP");
    if (role == "DA") s.role = Role::DA;
    else if (role == "MP") s.role = Role::MP;
    else config_error("actor '" + s.identity + "': unknown role '" + role + "'");
    s.behavior = behavior_from_string(field_or<std::string>(a, "behavior", "Honest"));
    s.target = field_or<Serial>(a, "target", 1);
    s.initial_balance = field_or<Amount>(a, "initial_balance", 0);
    c.actors.push_back(std::move(s));
  }
  auto list = [&](const char* key) {
    if (!j.contains(key)) return nlohmann::json::array();
    if (!j[key].is_array()) config_error(std::string(key) + ": expected an array");
    return j[key];
  };
  std::size_t k = 0;
  for (const auto& m : list("preregistered")) {
    c.preregistered.push_back(parse_media(m, base_dir, c.preregistered, "preregistered[" + std::to_string(k) + "]",
                                          c.seed, k));
    ++k;
  }
  k = 0;
  for (const auto& m : list("media")) {
    c.media.push_back(parse_media(m, base_dir, c.preregistered, "media[" + std::to_string(k) + "]", c.seed, 1000 + k));
    ++k;
  }
  c.validate();
  return c;
}

void ScenarioConfig::validate() const {
  std::set<std::string> ids;
  std::size_t das = 0;
  for (const auto& a : actors) {
    if (a.identity.empty()) config_error("actor identity must be non-empty");
    if (a.identity == "CA") config_error("identity 'CA' is reserved for the certificate authority");
    if (!ids.insert(a.identity).second) config_error("duplicate actor '" + a.identity + "'");
    if (a.initial_balance < 0) config_error("negative balance for '" + a.identity + "'");
    if (a.role == Role::DA) {
      ++das;
      if (a.behavior == Behavior::NegligentVerifier) config_error("NegligentVerifier is a media-provider behavior");
      if (a.behavior == Behavior::MisreportPiracy && a.target == 0) config_error("MisreportPiracy target must be >= 1");
    } else if (a.behavior != Behavior::Honest && a.behavior != Behavior::NegligentVerifier) {
      config_error("'" + a.identity + "': " + std::string(to_string(a.behavior)) + " is a DA behavior");
    }
  }
  if (das != 1) config_error("exactly one DA is required, found " + std::to_string(das));
  auto check_media = [&](const std::vector<MediaSpec>& list) {
    for (const auto& m : list) {
      auto it = std::find_if(actors.begin(), actors.end(), [&](const ActorSpec& a) { return a.identity == m.owner; });
      if (it == actors.end() || it->role != Role::MP) config_error(m.label + ": owner must be a media provider");
      if (m.content.empty()) config_error(m.label + ": empty medium");
    }
  };
  check_media(preregistered);
  check_media(media);
  if (theta > 64) config_error("theta must be at most 64");
  if (timeout_ticks == 0) config_error("timeout_ticks must be positive");
  if (fee <= 0 || deposit <= 0) config_error("fee and deposit must be positive");
  try {
    params.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
}

std::string ScenarioEvent::to_text() const {
  std::string line = "t=" + std::to_string(tick) + " " + actor + " " + kind;
  if (!detail.empty()) line += " " + detail;
  return line;
}

bool ScenarioReport::ok() const {
  return std::all_of(invariants.begin(), invariants.end(), [](const InvariantResult& r) { return r.ok; });
}

std::string ScenarioReport::event_log_text() const {
  std::string out;
  for (const auto& e : event_log) out += e.to_text() + "\n";
  return out;
}

ordered_json ScenarioReport::to_json() const {
  ordered_json j;
  j["ok"] = ok();
  ordered_json init = ordered_json::object(), fin = ordered_json::object();
  for (const auto& [k, v] : initial_balances) init[k] = v;
  for (const auto& [k, v] : final_balances) fin[k] = v;
  j["initial_balances"] = std::move(init);
  j["final_balances"] = std::move(fin);
  j["escrow"] = escrow;

  ordered_json verdicts = ordered_json::array(), challenges = ordered_json::array();
  for (const auto& t : tasks) {
    ordered_json v;
    v["task_id"] = t.task_id;
    v["medium"] = t.medium;
    v["requester"] = t.requester;
    v["detected"] = t.detected ? ordered_json(std::string(to_string(*t.detected))) : ordered_json();
    v["posted"] = t.posted ? ordered_json(std::string(to_string(*t.posted))) : ordered_json();
    v["serial"] = t.serial ? ordered_json(*t.serial) : ordered_json();
    v["final_state"] = t.final_state;
    v["judge_passed"] = t.judge_passed ? ordered_json(*t.judge_passed) : ordered_json();
    verdicts.push_back(std::move(v));
    for (const auto& c : t.challenges)
      challenges.push_back({{"task_id", t.task_id},
                            {"challenger", c.challenger},
                            {"n_prime", c.evidence.n_prime},
                            {"n", c.evidence.n},
                            {"succeeded", c.succeeded},
                            {"tick", c.at}});
  }
  j["verdicts"] = std::move(verdicts);
  j["challenge_outcomes"] = std::move(challenges);
  j["chain_height"] = chain_height;
  j["chain_tip"] = chain.empty() ? std::string() : chain.back().block_hash.hex();
  ordered_json counts = ordered_json::object();
  for (const auto& [k, v] : message_counts) counts[k] = v;
  j["message_counts"] = std::move(counts);
  ordered_json inv = ordered_json::array();
  for (const auto& r : invariants) inv.push_back({{"name", r.name}, {"ok", r.ok}, {"detail", r.detail}});
  j["invariants"] = std::move(inv);
  ordered_json log = ordered_json::array();
  for (const auto& e : event_log)
    log.push_back({{"tick", e.tick}, {"actor", e.actor}, {"kind", e.kind}, {"detail", e.detail}});
  j["event_log"] = std::move(log);
  j["contract_state"] = contract_state;
  return j;
}

struct Simulation::State {
  struct Actor {
    ActorSpec spec;
    KeyPair keys;
    Certificate cert;
    RegistryMirror mirror;
  };

  ScenarioConfig config;
  std::optional<CertificateAuthority> ca;
  std::vector<Actor> actors;
  std::size_t da = 0;
  std::optional<Ledger> ledger;
  std::optional<EscrowContract> contract;
  std::optional<ContentStore> store;
  std::vector<ScenarioEvent> events;
  std::vector<TaskSummary> tasks;
  std::map<TaskId, std::vector<Payout>> payouts;
  std::map<std::string, Amount> initial_balances;
  bool conserved_every_block = true;
  std::string conservation_detail;

  Actor& actor(const std::string& id) {
    for (auto& a : actors)
      if (a.spec.identity == id) return a;
    config_error("unknown actor '" + id + "'");
  }

  void log(Tick t, const std::string& who, std::string kind, std::string detail = {}) {
    events.push_back({t, who, std::move(kind), std::move(detail)});
  }
};

namespace {

std::string describe(const Payload& p) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, EnrollPayload>) {
          return "identity=" + x.certificate.subject_identity;
        } else if constexpr (std::is_same_v<T, RegisterPayload>) {
          return "hashID=" + short_hex(x.hash_id.hex()) + " lshv=" + x.lshv.hex() + " QM=" + short_hex(x.qm.hex());
        } else if constexpr (std::is_same_v<T, RequestDetectionPayload>) {
          return "Q=" + short_hex(x.q.hex()) + " fee=" + std::to_string(x.fee);
        } else if constexpr (std::is_same_v<T, PostResultPayload>) {
          std::string s = "task=" + std::to_string(x.task_id) + " verdict=" + std::string(to_string(x.record.verdict)) +
                          " N=" + std::to_string(x.record.serial);
          if (x.record.hash_id) s += " hashID=" + short_hex(x.record.hash_id->hex());
          if (x.record.lshv) s += " lshv=" + x.record.lshv->hex();
          return s + " deposit=" + std::to_string(x.deposit);
        } else if constexpr (std::is_same_v<T, ChallengePayload>) {
          return "task=" + std::to_string(x.task_id) + " evidence={N'=" + std::to_string(x.evidence.n_prime) +
                 ", N=" + std::to_string(x.evidence.n) + "}";
        } else if constexpr (std::is_same_v<T, SettlePayload>) {
          return "task=" + std::to_string(x.task_id);
        } else if constexpr (std::is_same_v<T, TransferPayload>) {
          return "to=" + x.to + " amount=" + std::to_string(x.amount);
        } else {
          return {};
        }
      },
      p);
}

}  // namespace

Simulation::Simulation(ScenarioConfig config, const fs::path& store_root) : s_(std::make_unique<State>()) {
  config.validate();
  State& s = *s_;
  s.config = std::move(config);
  s.ca.emplace("CA", KeyPair::from_seed(derive(s.config.seed, 0, 0)));

  DeployPayload deploy;
  deploy.ca_identity = s.ca->identity();
  deploy.ca_public_key = s.ca->public_key();
  deploy.theta = s.config.theta;
  deploy.timeout_ticks = s.config.timeout_ticks;
  for (std::size_t i = 0; i < s.config.actors.size(); ++i) {
    const ActorSpec& spec = s.config.actors[i];
    State::Actor a{spec, KeyPair::from_seed(derive(s.config.seed, 1, i)), {}, {}};
    a.cert = s.ca->issue(spec.identity, a.keys.public_key);
    if (spec.role == Role::DA) {
      s.da = i;
      deploy.detection_agency = spec.identity;
    }
    deploy.allocations[spec.identity] = spec.initial_balance;
    s.initial_balances[spec.identity] = spec.initial_balance;
    s.actors.push_back(std::move(a));
  }

  s.ledger.emplace(*s.ca, deploy, 0);
  s.contract.emplace(deploy);
  s.store.emplace(store_root);
  s.contract->set_address_resolver([this](const AddressHash& q) { return s_->store->contains(q); });
  s.log(0, "CA", "deploy",
        "DA=" + deploy.detection_agency + " theta=" + std::to_string(deploy.theta) + " T=" +
            std::to_string(deploy.timeout_ticks));
  now_ = 1;

  for (const auto& a : s.actors) execute(a.spec.identity, EnrollPayload{a.cert});
  advance_clock(1);

  // Legal media: stored sealed to the DA, fingerprints registered on chain.
  const PublicKey da_key = s.actors[s.da].keys.public_key;
  for (std::size_t i = 0; i < s.config.preregistered.size(); ++i) {
    const MediaSpec& m = s.config.preregistered[i];
    const auto ct = hybrid_encrypt(da_key, m.content, derive(s.config.seed, 3, i));
    const AddressHash qm = s.store->put(ct.serialize(), now_);
    const MediaFingerprint fp{compute_hash_id(m.content), simhash(to_string(m.content), s.config.params)};
    s.log(now_, m.owner, "store", m.label + " QM=" + short_hex(qm.hex()));
    execute(m.owner, RegisterPayload{fp.hash_id, fp.lshv, qm});
  }
  if (!s.config.preregistered.empty()) advance_clock(1);
}

Simulation::~Simulation() = default;

const Ledger& Simulation::ledger() const { return *s_->ledger; }
const EscrowContract& Simulation::contract() const { return *s_->contract; }
const ContentStore& Simulation::store() const { return *s_->store; }
const ScenarioConfig& Simulation::config() const { return s_->config; }

bool Simulation::execute(const std::string& actor_id, const Payload& payload) {
  State& s = *s_;
  State::Actor& a = s.actor(actor_id);
  const std::uint64_t nonce = s.ledger->last_nonce(actor_id).value_or(0) + 1;
  Transaction tx = Transaction::make(actor_id, nonce, payload, a.keys.secret_key);
  const std::string type(payload_type(payload));

  ContractOutcome outcome;
  try {
    s.ledger->check(tx);
    outcome = s.contract->apply(actor_id, payload, now_);
  } catch (const Error& e) {
    s.log(now_, actor_id, "rejected", type + " " + describe(payload) + " (" + e.what() + ")");
    return false;
  }
  const Receipt r = s.ledger->submit_transaction(std::move(tx));

  std::string detail = describe(payload) + " -> block " + std::to_string(r.height) + "#" + std::to_string(r.index);
  if (outcome.task_id && std::holds_alternative<RequestDetectionPayload>(payload))
    detail += " task=" + std::to_string(*outcome.task_id);
  if (outcome.serial) detail += " N=" + std::to_string(*outcome.serial);
  if (outcome.challenge_succeeded) detail += *outcome.challenge_succeeded ? " challenge=success" : " challenge=failed";
  for (const auto& p : outcome.payouts) detail += " pay " + p.to + "+" + std::to_string(p.amount);
  s.log(now_, actor_id, type, detail);

  if (outcome.task_id && !outcome.payouts.empty()) {
    auto& list = s.payouts[*outcome.task_id];
    list.insert(list.end(), outcome.payouts.begin(), outcome.payouts.end());
  }
  if (!s.contract->conserved() && s.conserved_every_block) {
    s.conserved_every_block = false;
    s.conservation_detail = "after " + type + " at tick " + std::to_string(now_);
  }
  return true;
}

void Simulation::advance_clock(Tick ticks) {
  if (ticks == 0) config_error("advance_clock needs at least one tick");
  State& s = *s_;
  for (Tick k = 0; k < ticks; ++k) {
    const Block b = s.ledger->seal_block(now_);
    s.log(now_, "sequencer", "seal",
          "height=" + std::to_string(b.height) + " txs=" + std::to_string(b.transactions.size()) + " hash=" +
              short_hex(b.block_hash.hex()));
    if (!s.contract->conserved() && s.conserved_every_block) {
      s.conserved_every_block = false;
      s.conservation_detail = "block " + std::to_string(b.height);
    }
    ++now_;

    // Settlements that have come due are submitted by whoever is owed money.
    for (const auto& t : s.contract->tasks()) {
      if (is_terminal(t.state) || now_ <= t.deadline) continue;
      const std::string& who = t.state == TaskState::Requested ? t.requester : s.actors[s.da].spec.identity;
      execute(who, SettlePayload{t.id});
    }
  }
}

std::optional<TaskId> Simulation::run_task(std::size_t media_index) {
  State& s = *s_;
  if (media_index >= s.config.media.size()) config_error("no medium with index " + std::to_string(media_index));
  const MediaSpec& m = s.config.media[media_index];
  State::Actor& mp = s.actor(m.owner);
  State::Actor& da = s.actors[s.da];

  // Step 1: both sides check each other's certificate.
  PublicKey da_key;
  try {
    const auto peers = mutual_authenticate(mp.cert, da.cert, s.ca->public_key());
    da_key = peers.second.public_key;
    s.log(now_, m.owner, "authenticate", "peer=" + peers.second.identity);
  } catch (const Error& e) {
    s.log(now_, m.owner, "abort", e.what());
    return std::nullopt;
  }

  // Steps 2-3: seal the medium to the DA, store it, pay for detection.
  const auto ct = hybrid_encrypt(da_key, m.content, derive(s.config.seed, 2, media_index));
  const Bytes envelope = ct.serialize();
  const AddressHash q = s.store->put(envelope, now_);
  s.log(now_, m.owner, "store", m.label + " S=" + std::to_string(envelope.size()) + "B Q=" + short_hex(q.hex()));
  if (!execute(m.owner, RequestDetectionPayload{q, s.config.fee})) return std::nullopt;
  const TaskId task_id = s.contract->tasks().back().id;

  TaskSummary summary;
  summary.task_id = task_id;
  summary.medium = m.label;
  summary.requester = m.owner;
  s.tasks.push_back(summary);
  TaskSummary& sum = s.tasks.back();
  advance_clock(1);

  // Detect: sync, fetch, decrypt, classify, post.
  std::optional<ResultRecord> record;
  try {
    da.mirror.sync(*s.ledger);
    const Bytes plain = hybrid_decrypt(da.keys.secret_key, HybridCiphertext::deserialize(s.store->get(q)));
    const DetectionVerdict v = detect(plain, da.mirror.index(), s.config.params, Threshold(s.config.theta));
    sum.detected = v.kind;
    s.log(now_, da.spec.identity, "detect",
          "task=" + std::to_string(task_id) + " verdict=" + std::string(to_string(v.kind)) +
              (v.kind == Verdict::Legitimate ? "" : " N=" + std::to_string(v.serial)) +
              (v.kind == Verdict::PartialPiracy ? " L=" + std::to_string(v.distance.value) : ""));
    const Serial next = da.mirror.contract().next_serial();
    switch (da.spec.behavior) {
      case Behavior::MisreportLegitimate: {
        DetectionVerdict lie = v;
        lie.kind = Verdict::Legitimate;
        record = build_result_record(lie, q, next);
        break;
      }
      case Behavior::MisreportPiracy: {
        DetectionVerdict lie = v;
        lie.kind = Verdict::PartialPiracy;
        lie.serial = da.spec.target;
        record = build_result_record(lie, q, next);
        break;
      }
      default:
        record = build_result_record(v, q, next);
    }
  } catch (const Error& e) {
    s.log(now_, da.spec.identity, "detect-failed", "task=" + std::to_string(task_id) + " (" + e.what() + ")");
  }
  if (record && execute(da.spec.identity, PostResultPayload{task_id, *record, s.config.deposit})) {
    sum.posted = record->verdict;
    sum.serial = record->serial;
  }
  advance_clock(1);

  // Verification: other honest providers compare the posted fingerprints with
  // their own copy of the registry; the first valid challenge settles it.
  if (s.contract->task(task_id).state == TaskState::ResultPosted) {
    for (auto& v : s.actors) {
      if (v.spec.role != Role::MP || v.spec.identity == m.owner) continue;
      if (v.spec.behavior == Behavior::NegligentVerifier) {
        s.log(now_, v.spec.identity, "skip-verify", "task=" + std::to_string(task_id));
        continue;
      }
      v.mirror.sync(*s.ledger);
      const DetectionTask& seen = v.mirror.contract().task(task_id);
      if (seen.state != TaskState::ResultPosted) break;
      const ResultRecord& posted = *seen.result;
      std::optional<NearMatch> best;
      for (const auto& e : v.mirror.index().contents()) {
        if (e.serial >= posted.serial) break;
        const HammingDistance d = e.hash_id == *posted.hash_id ? HammingDistance{0} : hamming_distance(e.lshv, *posted.lshv);
        if (Threshold(s.config.theta).admits(d) && (!best || d.value < best->distance.value)) best = NearMatch{e.serial, d};
      }
      if (!best) {
        s.log(now_, v.spec.identity, "verify", "task=" + std::to_string(task_id) + " no earlier match");
        continue;
      }
      s.log(now_, v.spec.identity, "verify",
            "task=" + std::to_string(task_id) + " N'=" + std::to_string(posted.serial) + " matches N=" +
                std::to_string(best->serial) + " L=" + std::to_string(best->distance.value));
      execute(v.spec.identity, ChallengePayload{task_id, {posted.serial, best->serial}});
      advance_clock(1);
    }
  }
  return task_id;
}

void Simulation::run_until_settled(TaskId task_id) {
  // Bounded: a due task is settled within one tick of its deadline.
  const Tick limit = now_ + 4 * s_->config.timeout_ticks + 8;
  while (!is_terminal(s_->contract->task(task_id).state) && now_ < limit) advance_clock(1);
}

ScenarioReport Simulation::finish() {
  State& s = *s_;
  const Tick limit = now_ + 4 * s.config.timeout_ticks + 8;
  auto open = [&] {
    return std::any_of(s.contract->tasks().begin(), s.contract->tasks().end(),
                       [](const DetectionTask& t) { return !is_terminal(t.state); });
  };
  while ((open() || s.ledger->pending_count() > 0) && now_ < limit) advance_clock(1);

  ScenarioReport r;
  r.initial_balances = s.initial_balances;
  r.final_balances = s.contract->balances();
  r.escrow = s.contract->escrow();
  r.chain = s.ledger->blocks();
  r.chain_height = r.chain.size() - 1;
  r.contract_state = s.contract->dump_state();
  r.event_log = s.events;
  for (const auto& b : r.chain)
    for (const auto& tx : b.transactions) ++r.message_counts[std::string(payload_type(tx.payload))];

  for (auto& sum : s.tasks) {
    const DetectionTask& t = s.contract->task(sum.task_id);
    sum.final_state = std::string(to_string(t.state));
    sum.judge_passed = t.judge_passed;
    sum.challenges = t.challenges;
  }
  r.tasks = s.tasks;

  auto check = [&](std::string name, bool ok, std::string detail) {
    r.invariants.push_back({std::move(name), ok, ok ? std::string() : std::move(detail)});
  };

  check("fund_conservation_every_block", s.conserved_every_block && s.contract->conserved(), s.conservation_detail);

  const ChainCheck chain = validate_chain(r.chain, s.ca->public_key());
  check("chain_valid", chain.ok(), chain.ok() ? "" : "block " + std::to_string(chain.violation->block) + ": " +
                                                        chain.violation->reason);

  std::string replay_detail;
  bool replay_ok = false;
  try {
    RegistryMirror fresh;
    fresh.sync(r.chain);
    replay_ok = fresh.contract().dump_state() == r.contract_state;
    if (!replay_ok) replay_detail = "replayed contract state differs";
  } catch (const Error& e) {
    replay_detail = e.what();
  }
  check("chain_replay_reproduces_contract", replay_ok, replay_detail);

  // Settlement exclusivity: every task terminal and paid out exactly once.
  std::string settle_detail;
  for (const auto& t : s.contract->tasks()) {
    const auto it = s.payouts.find(t.id);
    const std::size_t n = it == s.payouts.end() ? 0 : it->second.size();
    const Amount paid = n == 1 ? it->second.front().amount : 0;
    if (!is_terminal(t.state)) settle_detail += "task " + std::to_string(t.id) + " not terminal; ";
    else if (n != 1 || paid != t.fee + t.deposit) settle_detail += "task " + std::to_string(t.id) + " paid wrongly; ";
  }
  check("settlement_exclusivity", settle_detail.empty(), settle_detail);

  // (a) Only the DA sees plaintext: never in the log, on chain, or in the store.
  const std::string log_text = r.event_log_text();
  const std::string chain_text = export_chain(r.chain);
  std::vector<Bytes> blobs;
  for (const auto& e : s.store->entries()) blobs.push_back(s.store->get(e.address));
  std::string leak;
  auto scan = [&](const MediaSpec& m) {
    if (m.content.size() < 16) return;
    const std::string needle = to_string(m.content);
    if (log_text.find(needle) != std::string::npos || chain_text.find(needle) != std::string::npos)
      leak += m.label + " visible in log/chain; ";
    for (const auto& b : blobs)
      if (std::search(b.begin(), b.end(), m.content.begin(), m.content.end()) != b.end())
        leak += m.label + " stored in clear; ";
  };
  for (const auto& m : s.config.preregistered) scan(m);
  for (const auto& m : s.config.media) scan(m);
  check("plaintext_confined_to_DA", leak.empty(), leak);

  // (b)/(c) and the incentive property, task by task: an accepted result pays
  // the DA f_i + f_DA; a rejected one pays the DA nothing.
  const std::string& da = s.actors[s.da].spec.identity;
  std::string mp_detail, da_detail;
  for (const auto& t : s.contract->tasks()) {
    if (!t.result || !is_terminal(t.state)) continue;
    const bool challenged = std::any_of(t.challenges.begin(), t.challenges.end(),
                                        [](const ChallengeAttempt& c) { return c.succeeded; });
    const bool rejected = (t.judge_passed && !*t.judge_passed) || challenged;
    Amount to_da = 0;
    if (auto it = s.payouts.find(t.id); it != s.payouts.end())
      for (const auto& p : it->second)
        if (p.to == da) to_da += p.amount;
    if (!rejected && to_da != t.fee + t.deposit) mp_detail += "task " + std::to_string(t.id) + "; ";
    if (rejected && to_da != 0) da_detail += "task " + std::to_string(t.id) + "; ";
  }
  check("accepted_results_pay_DA", mp_detail.empty(), "accepted result but DA not paid: " + mp_detail);
  check("rejected_results_cost_DA_deposit", da_detail.empty(), "DA paid for rejected result: " + da_detail);
  return r;
}

ScenarioReport run_scenario(const ScenarioConfig& config, const fs::path& store_root) {
  Simulation sim(config, store_root);
  for (std::size_t i = 0; i < config.media.size(); ++i)
    if (auto id = sim.run_task(i)) sim.run_until_settled(*id);
  return sim.finish();
}

}  // namespace credetect
