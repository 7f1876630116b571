#include "credetect/content_store.hpp"

#include <fstream>
#include <iterator>
#include <mutex>

#include "json.hpp"

#include "credetect/crypto.hpp"
#include "credetect/errors.hpp"

namespace credetect {

namespace fs = std::filesystem;

AddressHash content_address(ByteView bytes) {
  AddressHash a;
  a.bytes = sha256(bytes);
  return a;
}

ContentStore::ContentStore(fs::path root, std::uint64_t capacity_bytes)
    : root_(std::move(root)), capacity_(capacity_bytes) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create store at " + root_.string() + ": " + ec.message());
  load_index();
}

fs::path ContentStore::blob_path(const AddressHash& address) const { return root_ / address.hex(); }

void ContentStore::load_index() {
  const fs::path index = root_ / "index.json";
  if (!fs::exists(index)) return;
  std::ifstream in(index);
  nlohmann::json j;
  try {
    in >> j;
    for (const auto& e : j) {
      StoredBlob b{AddressHash::from_hex(e.at("address").get<std::string>()), e.at("size").get<std::uint64_t>(),
                   e.at("stored_at").get<std::uint64_t>()};
      if (by_address_.count(b.address)) throw Error(ErrorCode::ParseError, "duplicate address in index");
      by_address_.emplace(b.address, order_.size());
      order_.push_back(b);
      total_ += b.size;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("store index: ") + e.what());
  }
}

void ContentStore::write_index() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& b : order_)
    j.push_back({{"address", b.address.hex()}, {"size", b.size}, {"stored_at", b.stored_at}});
  const fs::path tmp = root_ / "index.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, root_ / "index.json");
}

AddressHash ContentStore::put(ByteView bytes, std::uint64_t now) {
  if (bytes.empty()) throw Error(ErrorCode::EmptyBlob, "refusing to store an empty blob");
  const AddressHash address = content_address(bytes);

  std::unique_lock lock(mutex_);
  if (by_address_.count(address)) return address;
  if (bytes.size() > capacity_ - total_)
    throw Error(ErrorCode::StorageFull, std::to_string(bytes.size()) + " bytes exceed remaining capacity " +
                                            std::to_string(capacity_ - total_));

  // Write to a temp name first so a crash never leaves a half-written blob
  // under its final address.
  const fs::path final_path = blob_path(address);
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, final_path);

  by_address_.emplace(address, order_.size());
  order_.push_back({address, bytes.size(), now});
  total_ += bytes.size();
  write_index();
  return address;
}

Bytes ContentStore::get(const AddressHash& address) const {
  std::shared_lock lock(mutex_);
  if (!by_address_.count(address)) throw Error(ErrorCode::NotFound, address.hex());

  std::ifstream in(blob_path(address), std::ios::binary);
  if (!in) throw Error(ErrorCode::IntegrityViolation, "blob file missing for " + address.hex());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content_address(data) != address)
    throw Error(ErrorCode::IntegrityViolation, "stored bytes no longer hash to " + address.hex());
  return data;
}

bool ContentStore::contains(const AddressHash& address) const {
  std::shared_lock lock(mutex_);
  return by_address_.count(address) != 0;
}

std::vector<StoredBlob> ContentStore::entries() const {
  std::shared_lock lock(mutex_);
  return order_;
}

std::size_t ContentStore::blob_count() const {
  std::shared_lock lock(mutex_);
  return order_.size();
}

std::uint64_t ContentStore::stored_bytes() const {
  std::shared_lock lock(mutex_);
  return total_;
}

}  // namespace credetect
