#include "credetect/detector.hpp"

#include <algorithm>
#include <bit>

#include "credetect/errors.hpp"

namespace credetect {

void LocalIndex::insert(Serial serial, const HashId& hash_id, SimHashValue lshv) {
  if (exact_.count(hash_id)) throw Error(ErrorCode::DuplicateHashId, hash_id.hex());
  auto pos = std::lower_bound(serials_.begin(), serials_.end(), serial);
  if (pos != serials_.end() && *pos == serial)
    throw Error(ErrorCode::MalformedRecord, "serial " + std::to_string(serial) + " already indexed");
  const auto i = pos - serials_.begin();
  serials_.insert(pos, serial);
  lshvs_.insert(lshvs_.begin() + i, lshv.value);
  hash_ids_.insert(hash_ids_.begin() + i, hash_id);
  exact_.emplace(hash_id, serial);
  if (multi_) slice_insert(serial, lshv.value);
}

void LocalIndex::erase(Serial serial) {
  auto pos = std::lower_bound(serials_.begin(), serials_.end(), serial);
  if (pos == serials_.end() || *pos != serial) return;
  const auto i = pos - serials_.begin();
  exact_.erase(hash_ids_[i]);
  serials_.erase(pos);
  lshvs_.erase(lshvs_.begin() + i);
  hash_ids_.erase(hash_ids_.begin() + i);
  if (multi_) rebuild_slices();
}

std::optional<Serial> LocalIndex::exact(const HashId& hash_id) const {
  auto it = exact_.find(hash_id);
  if (it == exact_.end()) return std::nullopt;
  return it->second;
}

std::optional<NearMatch> LocalIndex::linear_scan(SimHashValue lshv, Threshold theta) const {
  std::optional<NearMatch> best;
  const unsigned limit = theta.theta();
  for (std::size_t i = 0; i < lshvs_.size(); ++i) {
    const auto d = static_cast<unsigned>(std::popcount(lshvs_[i] ^ lshv.value));
    // Serials ascend, so strict < keeps the smallest N among equal distances.
    if (d <= limit && (!best || d < best->distance.value)) {
      best = NearMatch{serials_[i], HammingDistance{d}};
      if (d == 0) break;
    }
  }
  return best;
}

std::optional<NearMatch> LocalIndex::nearest_within(SimHashValue lshv, Threshold theta) const {
  if (!multi_ || theta.theta() > multi_->theta) return linear_scan(lshv, theta);

  std::vector<Serial> candidates;
  for (std::size_t s = 0; s < multi_->ranges.size(); ++s) {
    const auto [shift, width] = multi_->ranges[s];
    const std::uint64_t mask = width == 64 ? ~0ull : ((1ull << width) - 1);
    const auto& table = multi_->tables[s];
    auto it = table.find((lshv.value >> shift) & mask);
    if (it != table.end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::optional<NearMatch> best;
  for (Serial n : candidates) {
    const auto i = std::lower_bound(serials_.begin(), serials_.end(), n) - serials_.begin();
    const auto d = static_cast<unsigned>(std::popcount(lshvs_[i] ^ lshv.value));
    if (d <= theta.theta() && (!best || d < best->distance.value)) best = NearMatch{n, HammingDistance{d}};
  }
  return best;
}

void LocalIndex::enable_multi_index(Threshold theta) {
  Slices s;
  s.theta = theta.theta();
  const unsigned count = std::min(64u, s.theta + 1);
  unsigned shift = 0;
  for (unsigned k = 0; k < count; ++k) {
    const unsigned width = 64 / count + (k < 64 % count ? 1 : 0);
    s.ranges.emplace_back(shift, width);
    shift += width;
  }
  s.tables.resize(count);
  multi_ = std::move(s);
  rebuild_slices();
}

void LocalIndex::disable_multi_index() { multi_.reset(); }

void LocalIndex::rebuild_slices() {
  for (auto& t : multi_->tables) t.clear();
  for (std::size_t i = 0; i < serials_.size(); ++i) slice_insert(serials_[i], lshvs_[i]);
}

void LocalIndex::slice_insert(Serial serial, std::uint64_t lshv) {
  for (std::size_t s = 0; s < multi_->ranges.size(); ++s) {
    const auto [shift, width] = multi_->ranges[s];
    const std::uint64_t mask = width == 64 ? ~0ull : ((1ull << width) - 1);
    multi_->tables[s][(lshv >> shift) & mask].push_back(serial);
  }
}

std::vector<IndexedMedia> LocalIndex::contents() const {
  std::vector<IndexedMedia> out;
  out.reserve(serials_.size());
  for (std::size_t i = 0; i < serials_.size(); ++i) out.push_back({serials_[i], hash_ids_[i], {lshvs_[i]}});
  return out;
}

DetectionVerdict detect(ByteView media, const LocalIndex& index, const SimHashParams& params, Threshold theta) {
  DetectionVerdict v;
  v.fingerprint.hash_id = compute_hash_id(media);
  v.fingerprint.lshv = simhash(to_string(media), params);
  if (auto n = index.exact(v.fingerprint.hash_id)) {
    v.kind = Verdict::CompletePiracy;
    v.serial = *n;
    v.distance = hamming_distance(v.fingerprint.lshv, v.fingerprint.lshv);
    return v;
  }
  if (auto m = index.nearest_within(v.fingerprint.lshv, theta)) {
    v.kind = Verdict::PartialPiracy;
    v.serial = m->serial;
    v.distance = m->distance;
    return v;
  }
  v.kind = Verdict::Legitimate;
  return v;
}

ResultRecord build_result_record(const DetectionVerdict& verdict, const AddressHash& qm, Serial next_serial) {
  ResultRecord r;
  r.verdict = verdict.kind;
  r.qm = qm;
  switch (verdict.kind) {
    case Verdict::CompletePiracy:
      r.serial = verdict.serial;
      r.hash_id = verdict.fingerprint.hash_id;
      break;
    case Verdict::PartialPiracy:
      r.serial = verdict.serial;
      r.lshv = verdict.fingerprint.lshv;
      break;
    case Verdict::Legitimate:
      r.serial = next_serial;
      r.hash_id = verdict.fingerprint.hash_id;
      r.lshv = verdict.fingerprint.lshv;
      break;
  }
  return r;
}

namespace {

void apply_block(EscrowContract& contract, const Block& b) {
  for (std::size_t i = 0; i < b.transactions.size(); ++i) {
    try {
      contract.apply(b.transactions[i].sender, b.transactions[i].payload, b.timestamp);
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptChain, "block " + std::to_string(b.height) + " tx " + std::to_string(i) +
                                               " rejected by the contract: " + e.what());
    }
  }
}

const DeployPayload& genesis_deploy(std::span<const Block> chain) {
  if (chain.empty() || chain[0].transactions.empty() ||
      !std::holds_alternative<DeployPayload>(chain[0].transactions[0].payload))
    throw Error(ErrorCode::CorruptChain, "chain does not start with a deploy");
  return std::get<DeployPayload>(chain[0].transactions[0].payload);
}

}  // namespace

EscrowContract replay_contract(std::span<const Block> chain) {
  EscrowContract contract(genesis_deploy(chain));
  for (std::size_t h = 1; h < chain.size(); ++h) apply_block(contract, chain[h]);
  return contract;
}

const EscrowContract& RegistryMirror::contract() const {
  if (!contract_) throw Error(ErrorCode::WrongState, "mirror has not synced a genesis block yet");
  return *contract_;
}

void RegistryMirror::sync(const Ledger& ledger) { sync(ledger.blocks()); }

void RegistryMirror::sync(std::span<const Block> chain) {
  const ChainCheck check = validate_chain(chain);
  if (!check.ok())
    throw Error(ErrorCode::CorruptChain, "block " + std::to_string(check.violation->block) + ": " +
                                             check.violation->reason);
  if (chain.size() < blocks_seen_ || (blocks_seen_ > 0 && chain[blocks_seen_ - 1].block_hash != last_hash_))
    throw Error(ErrorCode::CorruptChain, "chain no longer extends the synced head");

  for (std::size_t h = blocks_seen_; h < chain.size(); ++h) {
    const Block& b = chain[h];
    if (h == 0) {
      contract_.emplace(genesis_deploy(chain));
      continue;
    }
    apply_block(*contract_, b);
  }
  if (chain.size() == blocks_seen_) return;
  blocks_seen_ = chain.size();
  last_hash_ = chain.back().block_hash;

  const auto& events = contract_->registry_events();
  for (; events_seen_ < events.size(); ++events_seen_) {
    const RegistryEvent& ev = events[events_seen_];
    const RegistryEntry& e = contract_->entry(ev.serial);
    switch (ev.kind) {
      case RegistryEventKind::Registered:
        index_.insert(e.record.serial, e.record.hash_id, e.record.lshv);
        break;
      case RegistryEventKind::Revoked:
        index_.erase(ev.serial);
        break;
      case RegistryEventKind::Confirmed:
        break;
    }
  }
  index_.synced_height = chain.size() - 1;
}

}  // namespace credetect
