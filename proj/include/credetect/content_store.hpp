#pragma once

// Content-addressed blob store. Each blob lives in root/<hex address>;
// root/index.json lists {address, size, stored_at} in insertion order.
// Reads re-hash the file, so out-of-band edits surface as IntegrityViolation.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "credetect/bytes.hpp"

namespace credetect {

struct StoredBlob {
  AddressHash address;
  std::uint64_t size = 0;
  std::uint64_t stored_at = 0;  // logical tick of first insertion
};

AddressHash content_address(ByteView bytes);

class ContentStore {
 public:
  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

  // Opens (or creates) a store rooted at `root`, loading an existing index.
  explicit ContentStore(std::filesystem::path root, std::uint64_t capacity_bytes = kUnlimited);

  ContentStore(const ContentStore&) = delete;
  ContentStore& operator=(const ContentStore&) = delete;

  // Idempotent: identical bytes map to the same address and one stored copy.
  AddressHash put(ByteView bytes, std::uint64_t now = 0);
  Bytes get(const AddressHash& address) const;

  bool contains(const AddressHash& address) const;
  std::vector<StoredBlob> entries() const;
  std::size_t blob_count() const;
  std::uint64_t stored_bytes() const;

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path blob_path(const AddressHash& address) const;

 private:
  void load_index();
  void write_index() const;  // caller holds the unique lock

  std::filesystem::path root_;
  std::uint64_t capacity_;
  mutable std::shared_mutex mutex_;
  std::vector<StoredBlob> order_;
  std::unordered_map<AddressHash, std::size_t> by_address_;
  std::uint64_t total_ = 0;
};

}  // namespace credetect
