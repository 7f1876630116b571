#pragma once

// Append-only chain of signed transactions. A single sequencer seals blocks;
// consensus is out of scope. Block 0 carries the deploy transaction signed by
// the certificate authority, which anchors every later enrollment.

#include <cstdint>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "credetect/bytes.hpp"
#include "credetect/crypto.hpp"
#include "credetect/protocol.hpp"

namespace credetect {

struct Transaction {
  std::string sender;
  std::uint64_t nonce = 0;
  Payload payload;
  Signature signature{};

  // Domain-separated, length-prefixed encoding of (sender, nonce, payload).
  Bytes signing_bytes() const;

  static Transaction make(std::string sender, std::uint64_t nonce, Payload payload, const SecretKey& key);

  nlohmann::ordered_json to_json() const;
  static Transaction from_json(const nlohmann::ordered_json& j);

  bool operator==(const Transaction&) const = default;
};

struct Receipt {
  std::uint64_t height = 0;
  std::size_t index = 0;

  auto operator<=>(const Receipt&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  HashId prev_hash;
  Tick timestamp = 0;
  std::vector<Transaction> transactions;
  HashId block_hash;

  // SHA-256 of the canonical JSON of every field except block_hash.
  HashId compute_hash() const;

  nlohmann::ordered_json to_json() const;
  static Block from_json(const nlohmann::ordered_json& j);
  std::string to_line() const;  // canonical single-line JSON

  bool operator==(const Block&) const = default;
};

struct ChainViolation {
  std::uint64_t block = 0;          // height (or line index for unparsable input)
  std::optional<std::size_t> tx;    // transaction index within the block
  std::string reason;
};

struct ChainCheck {
  std::optional<ChainViolation> violation;  // first one, in chain order

  bool ok() const noexcept { return !violation.has_value(); }
  explicit operator bool() const noexcept { return ok(); }
};

// Checks heights, hash links, recomputed block hashes, and replays every
// signature, enrollment and nonce. `trust_anchor`, when given, must equal the
// CA key named in the genesis deploy.
ChainCheck validate_chain(std::span<const Block> blocks, const std::optional<PublicKey>& trust_anchor = {});

// One block per line, canonical field order, trailing newline.
std::string export_chain(std::span<const Block> blocks);
// Throws ParseError when a line does not parse or does not re-serialize to
// exactly the same bytes.
std::vector<Block> import_chain(std::string_view jsonl);
// Parse failures become a violation located at the offending line.
ChainCheck verify_chain_text(std::string_view jsonl, const std::optional<PublicKey>& trust_anchor = {});

namespace detail {
struct SenderState {
  PublicKey key;
  std::uint64_t last_nonce = 0;
};
using SenderMap = std::unordered_map<std::string, SenderState>;
}  // namespace detail

class Ledger {
 public:
  Ledger(const CertificateAuthority& ca, DeployPayload deploy, Tick genesis_time = 0);

  // Adopts an existing chain after validate_chain; throws CorruptChain.
  static Ledger from_blocks(std::vector<Block> blocks, const std::optional<PublicKey>& trust_anchor = {});

  Ledger(Ledger&& other) noexcept;

  // Throws BadSignature, NonceReplay, Unauthorized or InvalidCertificate
  // without changing state.
  void check(const Transaction& tx) const;
  Receipt submit_transaction(Transaction tx);

  // Drains the pending queue in FIFO order. Empty blocks are allowed; `now`
  // must not be earlier than the head timestamp.
  Block seal_block(Tick now);

  std::vector<std::pair<Receipt, Transaction>> trace(const std::function<bool(const Transaction&)>& pred) const;

  std::uint64_t height() const;  // height of the head block
  Block head() const;
  Tick head_timestamp() const;
  std::vector<Block> blocks() const;
  std::vector<Block> blocks_from(std::uint64_t height) const;
  std::size_t pending_count() const;

  const DeployPayload& deployment() const noexcept { return deploy_; }
  std::optional<PublicKey> public_key_of(const std::string& identity) const;
  std::optional<std::uint64_t> last_nonce(const std::string& identity) const;

 private:
  Ledger() = default;

  mutable std::shared_mutex mutex_;
  DeployPayload deploy_;
  std::vector<Block> blocks_;
  std::vector<Transaction> pending_;
  detail::SenderMap senders_;
};

}  // namespace credetect
