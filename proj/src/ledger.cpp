#include "credetect/ledger.hpp"

#include <mutex>

#include "credetect/errors.hpp"

namespace credetect {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kTxDomain = "credetect/tx/v1";

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_field(Bytes& out, std::string_view s) {
  put_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

std::uint64_t get_unsigned(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) bad(std::string(key) + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

void expect_keys(const ordered_json& j, std::initializer_list<std::string_view> keys, const char* what) {
  if (!j.is_object() || j.size() != keys.size()) bad(std::string(what) + ": wrong set of keys");
  for (auto k : keys)
    if (!j.contains(k)) bad(std::string(what) + ": missing key '" + std::string(k) + "'");
}

// The deploy payload of a well-formed genesis block, or an exception.
const DeployPayload& check_genesis(const Block& genesis, const std::optional<PublicKey>& anchor) {
  if (genesis.transactions.size() != 1) throw Error(ErrorCode::CorruptChain, "genesis must hold exactly the deploy");
  const Transaction& tx = genesis.transactions.front();
  const auto* deploy = std::get_if<DeployPayload>(&tx.payload);
  if (!deploy) throw Error(ErrorCode::CorruptChain, "genesis transaction is not a deploy");
  if (tx.sender != deploy->ca_identity) throw Error(ErrorCode::Unauthorized, "deploy not sent by the CA");
  if (anchor && *anchor != deploy->ca_public_key)
    throw Error(ErrorCode::InvalidCertificate, "deploy names a CA key other than the trust anchor");
  if (!verify_sig(deploy->ca_public_key, tx.signing_bytes(), tx.signature))
    throw Error(ErrorCode::BadSignature, "deploy signature");
  return *deploy;
}

// Enrollment, authorization, signature and nonce rules for every transaction
// after genesis. Mutates `senders` only when the transaction is admitted.
void admit(detail::SenderMap& senders, const DeployPayload& deploy, const Transaction& tx) {
  if (std::holds_alternative<DeployPayload>(tx.payload))
    throw Error(ErrorCode::Unauthorized, "deploy is only valid in genesis");

  if (const auto* enroll = std::get_if<EnrollPayload>(&tx.payload)) {
    const Certificate& cert = enroll->certificate;
    if (cert.issuer != deploy.ca_identity || !verify_certificate(cert, deploy.ca_public_key))
      throw Error(ErrorCode::InvalidCertificate, "certificate for '" + cert.subject_identity + "'");
    if (cert.subject_identity != tx.sender)
      throw Error(ErrorCode::Unauthorized, "certificate subject differs from sender");
    if (senders.count(tx.sender)) throw Error(ErrorCode::Unauthorized, "'" + tx.sender + "' already enrolled");
    if (!verify_sig(cert.subject_public_key, tx.signing_bytes(), tx.signature))
      throw Error(ErrorCode::BadSignature, "enrollment by '" + tx.sender + "'");
    senders.emplace(tx.sender, detail::SenderState{cert.subject_public_key, tx.nonce});
    return;
  }

  auto it = senders.find(tx.sender);
  if (it == senders.end()) throw Error(ErrorCode::Unauthorized, "'" + tx.sender + "' is not enrolled");
  if (!verify_sig(it->second.key, tx.signing_bytes(), tx.signature))
    throw Error(ErrorCode::BadSignature, "transaction by '" + tx.sender + "'");
  if (tx.nonce <= it->second.last_nonce)
    throw Error(ErrorCode::NonceReplay, "nonce " + std::to_string(tx.nonce) + " <= " +
                                            std::to_string(it->second.last_nonce) + " for '" + tx.sender + "'");
  it->second.last_nonce = tx.nonce;
}

// Replays a whole chain into a sender map; the first problem is reported as a
// violation instead of thrown.
ChainCheck replay(std::span<const Block> blocks, const std::optional<PublicKey>& anchor, detail::SenderMap* out) {
  ChainCheck check;
  auto fail = [&](std::uint64_t h, std::optional<std::size_t> tx, std::string reason) {
    check.violation = ChainViolation{h, tx, std::move(reason)};
    return check;
  };
  if (blocks.empty()) return fail(0, std::nullopt, "chain has no genesis block");

  detail::SenderMap senders;
  const DeployPayload* deploy = nullptr;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.height != i) return fail(i, std::nullopt, "height " + std::to_string(b.height) + " out of sequence");
    const HashId expected_prev = i == 0 ? HashId{} : blocks[i - 1].block_hash;
    if (b.prev_hash != expected_prev)
      return fail(i, std::nullopt, i == 0 ? "genesis prev_hash is not zero"
                                          : "prev_hash does not match block " + std::to_string(i - 1));
    if (b.compute_hash() != b.block_hash) return fail(i, std::nullopt, "block_hash does not match contents");
    if (i > 0 && b.timestamp < blocks[i - 1].timestamp) return fail(i, std::nullopt, "timestamp went backwards");

    if (i == 0) {
      try {
        deploy = &check_genesis(b, anchor);
      } catch (const Error& e) {
        return fail(0, 0, e.what());
      }
      senders.emplace(deploy->ca_identity, detail::SenderState{deploy->ca_public_key, b.transactions[0].nonce});
      continue;
    }
    for (std::size_t t = 0; t < b.transactions.size(); ++t) {
      try {
        admit(senders, *deploy, b.transactions[t]);
      } catch (const Error& e) {
        return fail(i, t, e.what());
      }
    }
  }
  if (out) *out = std::move(senders);
  return check;
}

}  // namespace

Bytes Transaction::signing_bytes() const {
  Bytes out;
  put_field(out, kTxDomain);
  put_field(out, sender);
  put_u64(out, nonce);
  put_field(out, credetect::to_json(payload).dump());
  return out;
}

Transaction Transaction::make(std::string sender, std::uint64_t nonce, Payload payload, const SecretKey& key) {
  Transaction tx{std::move(sender), nonce, std::move(payload), {}};
  tx.signature = sign(key, tx.signing_bytes());
  return tx;
}

ordered_json Transaction::to_json() const {
  ordered_json j;
  j["sender"] = sender;
  j["nonce"] = nonce;
  j["payload"] = credetect::to_json(payload);
  j["signature"] = base64_encode(signature);
  return j;
}

Transaction Transaction::from_json(const ordered_json& j) {
  try {
    expect_keys(j, {"sender", "nonce", "payload", "signature"}, "transaction");
    Transaction tx;
    if (!j.at("sender").is_string()) bad("sender: expected a string");
    tx.sender = j.at("sender").get<std::string>();
    tx.nonce = get_unsigned(j, "nonce");
    tx.payload = payload_from_json(j.at("payload"));
    if (!j.at("signature").is_string()) bad("signature: expected a string");
    const Bytes sig = base64_decode(j.at("signature").get<std::string>());
    if (sig.size() != tx.signature.size()) bad("signature: wrong length");
    std::copy(sig.begin(), sig.end(), tx.signature.begin());
    return tx;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("transaction: ") + e.what());
  }
}

namespace {

ordered_json block_body(const Block& b) {
  ordered_json j;
  j["height"] = b.height;
  j["prev_hash"] = b.prev_hash.hex();
  j["timestamp"] = b.timestamp;
  ordered_json txs = ordered_json::array();
  for (const auto& tx : b.transactions) txs.push_back(tx.to_json());
  j["transactions"] = std::move(txs);
  return j;
}

}  // namespace

HashId Block::compute_hash() const {
  HashId h;
  h.bytes = sha256(as_bytes(block_body(*this).dump()));
  return h;
}

ordered_json Block::to_json() const {
  ordered_json j = block_body(*this);
  j["block_hash"] = block_hash.hex();
  return j;
}

std::string Block::to_line() const { return to_json().dump(); }

Block Block::from_json(const ordered_json& j) {
  try {
    expect_keys(j, {"height", "prev_hash", "timestamp", "transactions", "block_hash"}, "block");
    Block b;
    b.height = get_unsigned(j, "height");
    if (!j.at("prev_hash").is_string() || !j.at("block_hash").is_string()) bad("block: hashes must be strings");
    b.prev_hash = HashId::from_hex(j.at("prev_hash").get<std::string>());
    b.timestamp = get_unsigned(j, "timestamp");
    const auto& txs = j.at("transactions");
    if (!txs.is_array()) bad("transactions: expected an array");
    for (const auto& t : txs) b.transactions.push_back(Transaction::from_json(t));
    b.block_hash = HashId::from_hex(j.at("block_hash").get<std::string>());
    return b;
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("block: ") + e.what());
  }
}

ChainCheck validate_chain(std::span<const Block> blocks, const std::optional<PublicKey>& trust_anchor) {
  return replay(blocks, trust_anchor, nullptr);
}

std::string export_chain(std::span<const Block> blocks) {
  std::string out;
  for (const auto& b : blocks) {
    out += b.to_line();
    out += '\n';
  }
  return out;
}

std::vector<Block> import_chain(std::string_view jsonl) {
  std::vector<Block> blocks;
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    const auto nl = jsonl.find('\n');
    if (nl == std::string_view::npos) bad("line " + std::to_string(line_no) + ": missing trailing newline");
    const std::string_view line = jsonl.substr(0, nl);
    jsonl.remove_prefix(nl + 1);
    try {
      const auto j = ordered_json::parse(line);
      Block b = Block::from_json(j);
      if (b.to_line() != line) bad("not in canonical form");
      blocks.push_back(std::move(b));
    } catch (const nlohmann::json::exception& e) {
      bad("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      // Keep the original code; what() already starts with its name.
      const std::string msg = e.what();
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + msg.substr(msg.find(": ") + 2));
    }
    ++line_no;
  }
  return blocks;
}

ChainCheck verify_chain_text(std::string_view jsonl, const std::optional<PublicKey>& trust_anchor) {
  std::vector<Block> blocks;
  try {
    blocks = import_chain(jsonl);
  } catch (const Error& e) {
    // import_chain reports "line N: ..."; keep the message, locate by line.
    std::uint64_t line = 0;
    const std::string msg = e.what();
    const auto pos = msg.find("line ");
    if (pos != std::string::npos) line = std::stoull(msg.substr(pos + 5));
    return ChainCheck{ChainViolation{line, std::nullopt, msg}};
  }
  return validate_chain(blocks, trust_anchor);
}

Ledger::Ledger(const CertificateAuthority& ca, DeployPayload deploy, Tick genesis_time) {
  if (deploy.ca_identity != ca.identity() || deploy.ca_public_key != ca.public_key())
    throw Error(ErrorCode::ConfigError, "deploy must name the signing CA");
  deploy_ = deploy;
  Block genesis;
  genesis.timestamp = genesis_time;
  genesis.transactions.push_back(Transaction::make(ca.identity(), 1, std::move(deploy), ca.secret_key()));
  genesis.block_hash = genesis.compute_hash();
  senders_.emplace(ca.identity(), detail::SenderState{ca.public_key(), 1});
  blocks_.push_back(std::move(genesis));
}

Ledger::Ledger(Ledger&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  deploy_ = std::move(other.deploy_);
  blocks_ = std::move(other.blocks_);
  pending_ = std::move(other.pending_);
  senders_ = std::move(other.senders_);
}

Ledger Ledger::from_blocks(std::vector<Block> blocks, const std::optional<PublicKey>& trust_anchor) {
  Ledger ledger;
  const ChainCheck check = replay(blocks, trust_anchor, &ledger.senders_);
  if (!check.ok())
    throw Error(ErrorCode::CorruptChain,
                "block " + std::to_string(check.violation->block) + ": " + check.violation->reason);
  ledger.deploy_ = std::get<DeployPayload>(blocks.front().transactions.front().payload);
  ledger.blocks_ = std::move(blocks);
  return ledger;
}

void Ledger::check(const Transaction& tx) const {
  std::shared_lock lock(mutex_);
  detail::SenderMap scratch;
  // Only the sender's own entry matters to admit(); work on a copy of it.
  if (auto it = senders_.find(tx.sender); it != senders_.end()) scratch.emplace(*it);
  admit(scratch, deploy_, tx);
}

Receipt Ledger::submit_transaction(Transaction tx) {
  std::unique_lock lock(mutex_);
  admit(senders_, deploy_, tx);
  pending_.push_back(std::move(tx));
  return Receipt{blocks_.size(), pending_.size() - 1};
}

Block Ledger::seal_block(Tick now) {
  std::unique_lock lock(mutex_);
  if (now < blocks_.back().timestamp)
    throw Error(ErrorCode::ConfigError, "sealing time " + std::to_string(now) + " precedes head timestamp");
  Block b;
  b.height = blocks_.size();
  b.prev_hash = blocks_.back().block_hash;
  b.timestamp = now;
  b.transactions = std::move(pending_);
  pending_.clear();
  b.block_hash = b.compute_hash();
  blocks_.push_back(b);
  return b;
}

std::vector<std::pair<Receipt, Transaction>> Ledger::trace(
    const std::function<bool(const Transaction&)>& pred) const {
  std::shared_lock lock(mutex_);
  std::vector<std::pair<Receipt, Transaction>> out;
  for (const auto& b : blocks_)
    for (std::size_t i = 0; i < b.transactions.size(); ++i)
      if (pred(b.transactions[i])) out.emplace_back(Receipt{b.height, i}, b.transactions[i]);
  return out;
}

std::uint64_t Ledger::height() const {
  std::shared_lock lock(mutex_);
  return blocks_.size() - 1;
}

Block Ledger::head() const {
  std::shared_lock lock(mutex_);
  return blocks_.back();
}

Tick Ledger::head_timestamp() const {
  std::shared_lock lock(mutex_);
  return blocks_.back().timestamp;
}

std::vector<Block> Ledger::blocks() const {
  std::shared_lock lock(mutex_);
  return blocks_;
}

std::vector<Block> Ledger::blocks_from(std::uint64_t height) const {
  std::shared_lock lock(mutex_);
  if (height >= blocks_.size()) return {};
  return {blocks_.begin() + static_cast<std::ptrdiff_t>(height), blocks_.end()};
}

std::size_t Ledger::pending_count() const {
  std::shared_lock lock(mutex_);
  return pending_.size();
}

std::optional<PublicKey> Ledger::public_key_of(const std::string& identity) const {
  std::shared_lock lock(mutex_);
  auto it = senders_.find(identity);
  if (it == senders_.end()) return std::nullopt;
  return it->second.key;
}

std::optional<std::uint64_t> Ledger::last_nonce(const std::string& identity) const {
  std::shared_lock lock(mutex_);
  auto it = senders_.find(identity);
  if (it == senders_.end()) return std::nullopt;
  return it->second.last_nonce;
}

}  // namespace credetect
