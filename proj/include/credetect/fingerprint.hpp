#pragma once

// Exact and locality-sensitive media fingerprints, hamming distance, and the
// distance-to-similarity regression used to pick the piracy threshold.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "credetect/bytes.hpp"

namespace credetect {

struct SimHashValue {
  std::uint64_t value = 0;

  std::string hex() const;  // 16 lowercase hex digits
  static SimHashValue from_hex(std::string_view text);

  auto operator<=>(const SimHashValue&) const = default;
};

struct HammingDistance {
  unsigned value = 0;  // 0..64

  auto operator<=>(const HammingDistance&) const = default;
};

// Maximum hamming distance judged as partial piracy. Comparison is inclusive.
class Threshold {
 public:
  // Calibrated at similarity 0.8 on the bundled corpus (1200 paragraphs, seed 1).
  static constexpr unsigned kDefault = 10;

  constexpr Threshold() = default;
  explicit Threshold(unsigned theta);

  constexpr unsigned theta() const noexcept { return theta_; }
  constexpr bool admits(HammingDistance d) const noexcept { return d.value <= theta_; }

  auto operator<=>(const Threshold&) const = default;

 private:
  unsigned theta_ = kDefault;
};

enum class Weighting {
  TermFrequency,  // every occurrence of a feature votes
  Binary,         // each distinct feature votes once
};

std::string_view to_string(Weighting w) noexcept;
Weighting weighting_from_string(std::string_view name);

struct SimHashParams {
  static constexpr unsigned kFeatureHashBits = 64;

  unsigned shingle_width = 4;  // code points per feature, >= 1
  Weighting weighting = Weighting::TermFrequency;

  void validate() const;
};

struct MediaFingerprint {
  HashId hash_id;
  SimHashValue lshv;

  bool operator==(const MediaFingerprint&) const = default;
};

struct SimilaritySample {
  HammingDistance distance;
  double similarity = 0.0;  // [0,1]
};

struct SimilarityModel {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t sample_count = 0;
};

// SHA-256 of the raw bytes.
HashId compute_hash_id(ByteView content);
inline HashId compute_hash_id(std::string_view content) { return compute_hash_id(as_bytes(content)); }

// 64-bit hash of one shingle: FNV-1a followed by the murmur3 finalizer so that
// every output bit depends on every input byte.
std::uint64_t feature_hash(std::string_view feature) noexcept;

// Throws EncodingError on invalid UTF-8 and EmptyInput on text that is empty
// after whitespace normalization.
SimHashValue simhash(std::string_view text, const SimHashParams& params = {});

MediaFingerprint fingerprint_media(std::string_view text, const SimHashParams& params = {});

HammingDistance hamming_distance(SimHashValue a, SimHashValue b) noexcept;

// Jaccard similarity over character 3-shingles of the normalized texts.
double reference_similarity(std::string_view a, std::string_view b);

// ceil(edit_rate * length) random single-character insertions, deletions or
// substitutions, driven entirely by seed.
std::string perturb_text(std::string_view text, double edit_rate, std::uint64_t seed);

SimilarityModel fit_similarity_model(std::span<const SimilaritySample> samples);

double predict_similarity(const SimilarityModel& model, HammingDistance distance) noexcept;

// Largest theta in [0,64] whose predicted similarity is still >= the minimum.
Threshold calibrate_threshold(const SimilarityModel& model, double min_pirate_similarity);

// Pearson correlation between distance and similarity; NaN when either side
// has zero variance.
double pearson_correlation(std::span<const SimilaritySample> samples) noexcept;

}  // namespace credetect
