#include "workspace.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"

#include "credetect/errors.hpp"

namespace credetect::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (domain * 0x100000001b3ull + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace

Workspace Workspace::open(const fs::path& dir, const WorkspaceParams& init) {
  Workspace w;
  w.dir_ = dir;
  const fs::path meta = dir / "workspace.json";
  fs::create_directories(dir / "keys");

  if (!fs::exists(meta)) {
    w.params_ = init;
    std::vector<std::string> ids{w.da_};
    ids.insert(ids.end(), init.providers.begin(), init.providers.end());

    nlohmann::ordered_json j;
    j["seed"] = init.seed;
    j["theta"] = init.theta;
    j["timeout_ticks"] = init.timeout_ticks;
    j["fee"] = init.fee;
    j["deposit"] = init.deposit;
    j["detection_agency"] = w.da_;
    j["providers"] = init.providers;
    j["initial_balance"] = init.initial_balance;

    const KeyPair ca_keys = KeyPair::from_seed(derive(init.seed, 0, 0));
    CertificateAuthority ca("CA", ca_keys);
    w.keys_.emplace_back("CA", ca_keys);
    DeployPayload deploy{"CA", ca.public_key(), w.da_, init.theta, init.timeout_ticks, {}};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      w.keys_.emplace_back(ids[i], KeyPair::from_seed(derive(init.seed, 1, i)));
      deploy.allocations[ids[i]] = init.initial_balance;
    }
    for (const auto& [id, kp] : w.keys_) {
      nlohmann::ordered_json k;
      k["identity"] = id;
      k["public_key"] = kp.public_key.to_base64();
      k["secret_key"] = kp.secret_key.to_base64();
      write_text(dir / "keys" / (id + ".json"), k.dump(2) + "\n");
    }
    w.ledger_.emplace(ca, deploy, 0);
    w.contract_.emplace(deploy);
    w.store_ = std::make_unique<ContentStore>(dir / "store");
    w.now_ = 1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const KeyPair& kp = w.keys(ids[i]);
      w.execute(ids[i], EnrollPayload{ca.issue(ids[i], kp.public_key)});
    }
    w.seal();
    write_text(meta, j.dump(2) + "\n");
    w.save();
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(meta));
      w.params_.seed = j.at("seed").get<std::uint64_t>();
      w.params_.theta = j.at("theta").get<unsigned>();
      w.params_.timeout_ticks = j.at("timeout_ticks").get<Tick>();
      w.params_.fee = j.at("fee").get<Amount>();
      w.params_.deposit = j.at("deposit").get<Amount>();
      w.da_ = j.at("detection_agency").get<std::string>();
      w.params_.providers = j.at("providers").get<std::vector<std::string>>();
      w.params_.initial_balance = j.at("initial_balance").get<Amount>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "workspace.json: " + std::string(e.what()));
    }
    std::vector<std::string> ids{"CA", w.da_};
    ids.insert(ids.end(), w.params_.providers.begin(), w.params_.providers.end());
    for (const auto& id : ids) {
      const auto k = nlohmann::json::parse(read_text(dir / "keys" / (id + ".json")));
      KeyPair kp{PublicKey::from_base64(k.at("public_key").get<std::string>()),
                 SecretKey::from_base64(k.at("secret_key").get<std::string>())};
      w.keys_.emplace_back(id, kp);
    }
    const auto blocks = import_chain(read_text(w.chain_path()));
    w.ledger_.emplace(Ledger::from_blocks(blocks, w.keys("CA").public_key));
    w.contract_.emplace(replay_contract(blocks));
    w.store_ = std::make_unique<ContentStore>(dir / "store");
    w.now_ = w.ledger_->head_timestamp() + 1;
  }
  w.contract_->set_address_resolver([store = w.store_.get()](const AddressHash& q) { return store->contains(q); });
  return w;
}

const KeyPair& Workspace::keys(const std::string& identity) const {
  for (const auto& [id, kp] : keys_)
    if (id == identity) return kp;
  throw Error(ErrorCode::UnknownAddress, "no participant '" + identity + "' in this workspace");
}

void Workspace::execute(const std::string& identity, const Payload& payload) {
  const std::uint64_t nonce = ledger_->last_nonce(identity).value_or(0) + 1;
  Transaction tx = Transaction::make(identity, nonce, payload, keys(identity).secret_key);
  ledger_->check(tx);
  contract_->apply(identity, payload, now_);
  ledger_->submit_transaction(std::move(tx));
}

void Workspace::seal() {
  ledger_->seal_block(now_);
  ++now_;
}

void Workspace::save() const { write_text(chain_path(), export_chain(ledger_->blocks())); }

Serial Workspace::register_media(const std::string& owner, const Bytes& media) {
  const MediaFingerprint fp{compute_hash_id(media), simhash(to_string(media))};
  const auto ct = hybrid_encrypt(keys(da_).public_key, media, derive(params_.seed, 3, ledger_->height()));
  const AddressHash qm = store_->put(ct.serialize(), now_);
  execute(owner, RegisterPayload{fp.hash_id, fp.lshv, qm});
  const Serial n = contract_->registry().back().record.serial;
  seal();
  save();
  return n;
}

DetectOutcome Workspace::detect(const std::string& requester, const Bytes& media) {
  const auto ct = hybrid_encrypt(keys(da_).public_key, media, derive(params_.seed, 2, ledger_->height()));
  const AddressHash q = store_->put(ct.serialize(), now_);
  execute(requester, RequestDetectionPayload{q, params_.fee});
  DetectOutcome out;
  out.task_id = contract_->tasks().back().id;
  seal();
  save();

  RegistryMirror mirror;
  mirror.sync(*ledger_);
  const Bytes plain = hybrid_decrypt(keys(da_).secret_key, HybridCiphertext::deserialize(store_->get(q)));
  out.verdict = detect_media(plain, mirror);
  out.record = build_result_record(out.verdict, q, mirror.contract().next_serial());
  execute(da_, PostResultPayload{out.task_id, out.record, params_.deposit});
  seal();
  save();
  out.state = std::string(to_string(contract_->task(out.task_id).state));
  return out;
}

DetectionVerdict Workspace::detect_media(const Bytes& plain, const RegistryMirror& mirror) const {
  return credetect::detect(plain, mirror.index(), SimHashParams{}, Threshold(params_.theta));
}

ChallengeOutcome Workspace::challenge(const std::string& challenger, TaskId task_id, std::optional<Serial> n) {
  const DetectionTask& t = contract_->task(task_id);
  if (!t.result) throw Error(ErrorCode::WrongState, "task " + std::to_string(task_id) + " has no posted result");
  const ResultRecord posted = *t.result;
  if (!n) {
    // Look for the earliest-registered closest match, as an honest verifier would.
    std::optional<NearMatch> best;
    for (const auto& e : contract_->registry()) {
      if (e.record.serial >= posted.serial || e.status == RegistryStatus::Revoked) continue;
      const HammingDistance d = posted.hash_id && e.record.hash_id == *posted.hash_id
                                    ? HammingDistance{0}
                                    : hamming_distance(e.record.lshv, posted.lshv.value_or(SimHashValue{}));
      if (contract_->theta().admits(d) && (!best || d.value < best->distance.value)) best = NearMatch{e.record.serial, d};
    }
    if (!best) throw Error(ErrorCode::EvidenceMismatch, "no earlier registered medium lies within theta");
    n = best->serial;
  }
  const std::size_t before = t.challenges.size();
  execute(challenger, ChallengePayload{task_id, {posted.serial, *n}});
  seal();
  save();
  const auto& attempts = contract_->task(task_id).challenges;
  ChallengeOutcome out;
  out.succeeded = attempts.size() > before && attempts.back().succeeded;
  if (out.succeeded) out.payouts.push_back({challenger, t.fee + t.deposit});
  return out;
}

std::vector<Payout> Workspace::settle(TaskId task_id) {
  const Tick due = contract_->task(task_id).deadline + 1;
  while (now_ < due) seal();
  const std::string who = contract_->task(task_id).state == TaskState::Requested ? contract_->task(task_id).requester : da_;
  const auto before = contract_->balances();
  execute(who, SettlePayload{task_id});
  seal();
  save();
  std::vector<Payout> out;
  for (const auto& [id, bal] : contract_->balances()) {
    const auto it = before.find(id);
    const Amount delta = bal - (it == before.end() ? 0 : it->second);
    if (delta != 0) out.push_back({id, delta});
  }
  return out;
}

}  // namespace credetect::cli
