#pragma once

// Off-chain detection: a local copy of the legal-media registry and the
// three-way classification (complete piracy, partial piracy, legitimate).

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "credetect/escrow_contract.hpp"
#include "credetect/fingerprint.hpp"
#include "credetect/ledger.hpp"
#include "credetect/protocol.hpp"

namespace credetect {

struct IndexedMedia {
  Serial serial = 0;
  HashId hash_id;
  SimHashValue lshv;

  bool operator==(const IndexedMedia&) const = default;
};

struct NearMatch {
  Serial serial = 0;
  HammingDistance distance;

  bool operator==(const NearMatch&) const = default;
};

class LocalIndex {
 public:
  void insert(Serial serial, const HashId& hash_id, SimHashValue lshv);  // throws DuplicateHashId
  void erase(Serial serial);                                              // no-op when absent

  std::optional<Serial> exact(const HashId& hash_id) const;
  // Minimal distance within theta; ties go to the smallest serial.
  std::optional<NearMatch> nearest_within(SimHashValue lshv, Threshold theta) const;

  // Pigeonhole tables over theta+1 disjoint bit slices: any fingerprint within
  // theta agrees with the query on at least one slice. Queries with a larger
  // threshold than the tables were built for fall back to the linear scan.
  void enable_multi_index(Threshold theta);
  void disable_multi_index();
  bool multi_index_enabled() const noexcept { return multi_.has_value(); }

  std::size_t size() const noexcept { return serials_.size(); }
  std::vector<IndexedMedia> contents() const;  // serial order

  std::uint64_t synced_height = 0;

 private:
  struct Slices {
    unsigned theta = 0;
    std::vector<std::pair<unsigned, unsigned>> ranges;  // (shift, width)
    std::vector<std::unordered_map<std::uint64_t, std::vector<Serial>>> tables;
  };

  std::optional<NearMatch> linear_scan(SimHashValue lshv, Threshold theta) const;
  void rebuild_slices();
  void slice_insert(Serial serial, std::uint64_t lshv);

  // Parallel arrays in serial order keep the popcount scan cache-friendly.
  std::vector<Serial> serials_;
  std::vector<std::uint64_t> lshvs_;
  std::vector<HashId> hash_ids_;
  std::unordered_map<HashId, Serial> exact_;
  std::optional<Slices> multi_;
};

struct DetectionVerdict {
  Verdict kind = Verdict::Legitimate;
  Serial serial = 0;            // matched N for piracy verdicts
  HammingDistance distance;     // for PartialPiracy
  MediaFingerprint fingerprint;
};

// Rule order: exact hashID match, then the closest lshv within theta, else
// legitimate. Throws EncodingError / EmptyInput from fingerprinting.
DetectionVerdict detect(ByteView media, const LocalIndex& index, const SimHashParams& params, Threshold theta);

ResultRecord build_result_record(const DetectionVerdict& verdict, const AddressHash& qm, Serial next_serial);

// Contract state reproduced from a chain (genesis deploy, then every
// transaction at its block timestamp). Throws CorruptChain if a transaction is
// rejected; the chain itself is not validated here.
EscrowContract replay_contract(std::span<const Block> chain);

// Replays the ledger into a replica contract and keeps a LocalIndex equal to
// its active registry. Every sync validates the chain first.
class RegistryMirror {
 public:
  // Throws CorruptChain when the chain fails validation, rewrites blocks that
  // were already synced, or contains a transaction the contract rejects.
  // After a throw the mirror is unusable and should be discarded.
  void sync(const Ledger& ledger);
  void sync(std::span<const Block> chain);

  const LocalIndex& index() const noexcept { return index_; }
  LocalIndex& index() noexcept { return index_; }
  const EscrowContract& contract() const;
  bool has_contract() const noexcept { return contract_.has_value(); }
  std::uint64_t synced_height() const noexcept { return index_.synced_height; }

 private:
  std::optional<EscrowContract> contract_;
  LocalIndex index_;
  std::size_t blocks_seen_ = 0;
  HashId last_hash_;
  std::size_t events_seen_ = 0;
};

}  // namespace credetect
