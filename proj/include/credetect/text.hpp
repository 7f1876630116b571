#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace credetect::text {

// Decodes strict UTF-8 (no overlongs, no surrogates). Throws EncodingError.
std::u32string decode_utf8(std::string_view bytes);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view cps);

// Collapses every run of Unicode white space to a single U+0020 and trims
// both ends.
std::u32string normalize(std::u32string_view cps);

// Normalized text re-encoded as UTF-8 plus the byte offset of every code point
// (with a trailing sentinel equal to the byte length), so shingles are plain
// substrings.
struct CodepointText {
  std::string utf8;
  std::vector<std::size_t> offsets;

  std::size_t length() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::string_view slice(std::size_t first, std::size_t count) const noexcept {
    return std::string_view(utf8).substr(offsets[first], offsets[first + count] - offsets[first]);
  }
};

CodepointText normalized_text(std::string_view bytes);

}  // namespace credetect::text
