#include "credetect/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

#include "credetect/crypto.hpp"
#include "credetect/errors.hpp"
#include "credetect/rng.hpp"
#include "credetect/text.hpp"

namespace credetect {

std::string SimHashValue::hex() const {
  std::array<std::uint8_t, 8> be{};
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
  return to_hex(be);
}

SimHashValue SimHashValue::from_hex(std::string_view text) {
  std::array<std::uint8_t, 8> be{};
  if (!credetect::from_hex(text, be))
    throw Error(ErrorCode::ParseError, "expected 16 lowercase hex digits");
  SimHashValue v;
  for (auto b : be) v.value = (v.value << 8) | b;
  return v;
}

Threshold::Threshold(unsigned theta) : theta_(theta) {
  if (theta > 64) throw Error(ErrorCode::ConfigError, "threshold must be within 0..64");
}

std::string_view to_string(Weighting w) noexcept {
  return w == Weighting::Binary ? "binary" : "tf";
}

Weighting weighting_from_string(std::string_view name) {
  if (name == "tf") return Weighting::TermFrequency;
  if (name == "binary") return Weighting::Binary;
  throw Error(ErrorCode::ConfigError, "unknown weighting '" + std::string(name) + "'");
}

void SimHashParams::validate() const {
  if (shingle_width < 1) throw Error(ErrorCode::ConfigError, "shingle_width must be >= 1");
}

HashId compute_hash_id(ByteView content) {
  HashId id;
  id.bytes = sha256(content);
  return id;
}

std::uint64_t feature_hash(std::string_view feature) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : feature) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

SimHashValue simhash(std::string_view content, const SimHashParams& params) {
  params.validate();
  const auto t = text::normalized_text(content);
  const std::size_t n = t.length();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "text is empty after whitespace normalization");

  const std::size_t width = std::min<std::size_t>(params.shingle_width, n);
  const std::size_t count = n - width + 1;

  std::array<std::int64_t, 64> votes{};
  auto vote = [&](std::uint64_t h) {
    for (int bit = 0; bit < 64; ++bit) votes[bit] += ((h >> bit) & 1) ? 1 : -1;
  };

  if (params.weighting == Weighting::TermFrequency) {
    for (std::size_t i = 0; i < count; ++i) vote(feature_hash(t.slice(i, width)));
  } else {
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < count; ++i) {
      auto f = t.slice(i, width);
      if (seen.insert(f).second) vote(feature_hash(f));
    }
  }

  SimHashValue out;
  for (int bit = 0; bit < 64; ++bit)
    if (votes[bit] > 0) out.value |= std::uint64_t{1} << bit;
  return out;
}

MediaFingerprint fingerprint_media(std::string_view text, const SimHashParams& params) {
  return MediaFingerprint{compute_hash_id(text), simhash(text, params)};
}

HammingDistance hamming_distance(SimHashValue a, SimHashValue b) noexcept {
  return HammingDistance{static_cast<unsigned>(std::popcount(a.value ^ b.value))};
}

namespace {

std::unordered_set<std::string_view> trigram_set(const text::CodepointText& t) {
  std::unordered_set<std::string_view> out;
  const std::size_t n = t.length();
  if (n == 0) return out;
  const std::size_t width = std::min<std::size_t>(3, n);
  for (std::size_t i = 0; i + width <= n; ++i) out.insert(t.slice(i, width));
  return out;
}

}  // namespace

double reference_similarity(std::string_view a, std::string_view b) {
  const auto ta = text::normalized_text(a);
  const auto tb = text::normalized_text(b);
  const auto sa = trigram_set(ta);
  const auto sb = trigram_set(tb);
  if (sa.empty() && sb.empty()) return 1.0;
  const auto& small = sa.size() <= sb.size() ? sa : sb;
  const auto& large = sa.size() <= sb.size() ? sb : sa;
  std::size_t common = 0;
  for (auto s : small) common += large.count(s);
  const std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::string perturb_text(std::string_view original, double edit_rate, std::uint64_t seed) {
  if (!(edit_rate > 0.0 && edit_rate <= 1.0))
    throw Error(ErrorCode::ConfigError, "edit_rate must be in (0, 1]");
  auto cps = text::decode_utf8(original);
  if (cps.empty()) throw Error(ErrorCode::EmptyInput, "cannot perturb empty text");

  static constexpr std::u32string_view kAlphabet = U"abcdefghijklmnopqrstuvwxyz ";
  DeterministicRng rng(seed);
  const auto edits = static_cast<std::size_t>(std::ceil(edit_rate * static_cast<double>(cps.size())));
  for (std::size_t e = 0; e < edits; ++e) {
    auto op = rng.uniform(3);
    if (op == 1 && cps.size() == 1) op = 2;  // never delete the last character
    switch (op) {
      case 0: {
        const auto pos = rng.uniform(cps.size() + 1);
        cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(pos), kAlphabet[rng.uniform(kAlphabet.size())]);
        break;
      }
      case 1:
        cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(rng.uniform(cps.size())));
        break;
      default: {
        const auto pos = rng.uniform(cps.size());
        char32_t c;
        do {
          c = kAlphabet[rng.uniform(kAlphabet.size())];
        } while (c == cps[pos]);
        cps[pos] = c;
      }
    }
  }
  return text::encode_utf8(cps);
}

SimilarityModel fit_similarity_model(std::span<const SimilaritySample> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::DegenerateSamples, "need at least two samples");
  double mx = 0, my = 0;
  for (const auto& s : samples) {
    if (!(s.similarity >= 0.0 && s.similarity <= 1.0))
      throw Error(ErrorCode::DegenerateSamples, "similarity outside [0,1]");
    mx += s.distance.value;
    my += s.similarity;
  }
  const auto n = static_cast<double>(samples.size());
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& s : samples) {
    const double dx = s.distance.value - mx;
    const double dy = s.similarity - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(ErrorCode::DegenerateSamples, "all hamming distances are equal");

  SimilarityModel m;
  m.slope = sxy / sxx;
  m.intercept = my - m.slope * mx;
  m.sample_count = samples.size();
  if (syy == 0.0) {
    m.r_squared = 1.0;
  } else {
    double sse = 0;
    for (const auto& s : samples) {
      const double r = s.similarity - (m.slope * s.distance.value + m.intercept);
      sse += r * r;
    }
    m.r_squared = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  }
  return m;
}

double predict_similarity(const SimilarityModel& model, HammingDistance distance) noexcept {
  return std::clamp(model.slope * distance.value + model.intercept, 0.0, 1.0);
}

Threshold calibrate_threshold(const SimilarityModel& model, double min_pirate_similarity) {
  if (model.slope >= 0.0)
    throw Error(ErrorCode::NonDecreasingModel, "similarity does not fall with distance");
  if (!(min_pirate_similarity > 0.0 && min_pirate_similarity <= 1.0))
    throw Error(ErrorCode::ConfigError, "minimum pirate similarity must be in (0, 1]");
  auto admits = [&](unsigned theta) {
    return predict_similarity(model, HammingDistance{theta}) >= min_pirate_similarity;
  };
  if (!admits(0))
    throw Error(ErrorCode::UnattainableSimilarity, "even identical fingerprints fall short");

  const double exact = (model.intercept - min_pirate_similarity) / -model.slope;
  auto theta = static_cast<unsigned>(std::clamp(std::floor(exact), 0.0, 64.0));
  // Rounding in the division can land one step off the clamped predictor.
  while (theta < 64 && admits(theta + 1)) ++theta;
  while (theta > 0 && !admits(theta)) --theta;
  return Threshold(theta);
}

double pearson_correlation(std::span<const SimilaritySample> samples) noexcept {
  if (samples.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (const auto& s : samples) {
    mx += s.distance.value;
    my += s.similarity;
  }
  const auto n = static_cast<double>(samples.size());
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& s : samples) {
    const double dx = s.distance.value - mx;
    const double dy = s.similarity - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace credetect
