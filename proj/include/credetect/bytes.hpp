#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace credetect {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

// Lowercase hex. from_hex accepts lowercase only so that every value has a
// single textual form.
std::string to_hex(ByteView bytes);
bool from_hex(std::string_view hex, std::span<std::uint8_t> out) noexcept;
Bytes from_hex(std::string_view hex);

std::string base64_encode(ByteView bytes);
Bytes base64_decode(std::string_view text);  // throws Error(ParseError)

// 256-bit digest, tagged so that media hashes and store addresses do not mix.
template <class Tag>
struct Digest256 {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const { return to_hex(bytes); }
  static Digest256 from_hex(std::string_view text);
  bool is_zero() const noexcept {
    for (auto b : bytes)
      if (b != 0) return false;
    return true;
  }

  auto operator<=>(const Digest256&) const = default;
};

struct HashIdTag {};
struct AddressTag {};

// Exact fingerprint of a medium (hashID).
using HashId = Digest256<HashIdTag>;
// Content address in the blob store (Q / QM).
using AddressHash = Digest256<AddressTag>;

}  // namespace credetect

template <class Tag>
struct std::hash<credetect::Digest256<Tag>> {
  std::size_t operator()(const credetect::Digest256<Tag>& d) const noexcept {
    std::size_t h;
    std::memcpy(&h, d.bytes.data(), sizeof h);
    return h;
  }
};
