#pragma once

// Builds (hamming distance, reference similarity) samples from a text corpus,
// fits the regression, and derives the piracy threshold.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "credetect/fingerprint.hpp"

namespace credetect {

// Paragraphs (blank-line separated) of every *.txt file in the directory,
// files visited in lexicographic order. Paragraphs shorter than min_chars code
// points are skipped.
std::vector<std::string> load_corpus(const std::filesystem::path& dir, std::size_t min_chars = 40);

// Deterministic English-like paragraphs drawn from a fixed vocabulary with
// topic-skewed word frequencies.
std::vector<std::string> generate_synthetic_corpus(std::size_t paragraphs, std::uint64_t seed);

// One paragraph per file: corpus_00000.txt, corpus_00001.txt, ...
inline constexpr std::size_t kBundledCorpusSize = 1200;
inline constexpr std::uint64_t kBundledCorpusSeed = 1;

void write_corpus(const std::filesystem::path& dir, const std::vector<std::string>& paragraphs);

struct CalibrationOptions {
  std::size_t n_base = 1000;
  std::size_t n_perturbed = 500;
  std::uint64_t seed = 1;
  double min_pirate_similarity = 0.8;
  // Enhanced copies draw their edit rate uniformly from (0, max_edit_rate].
  // 0.04 reaches just below similarity 0.8, so the fit covers the decision band.
  double max_edit_rate = 0.04;
  SimHashParams params;
};

struct SamplePair {
  std::size_t left = 0;   // corpus index
  std::size_t right = 0;  // corpus index of the partner text
  double edit_rate = 0.0; // 0: right is compared verbatim; >0: right is an edited copy
  SimilaritySample sample;
};

struct CalibrationResult {
  std::vector<SamplePair> pairs;
  SimilarityModel model;
  Threshold threshold;
  double pearson_r = 0.0;

  std::vector<SimilaritySample> samples() const;
};

// n_base pairs of a paragraph against its unmodified registry copy (distance
// 0, similarity 1) plus n_perturbed pairs of a base paragraph against a
// randomly enhanced copy. Throws CorpusTooSmall when fewer than n_base usable
// paragraphs (or fewer than two) are available.
std::vector<SamplePair> build_sample_pairs(const std::vector<std::string>& corpus,
                                           const CalibrationOptions& options);

CalibrationResult calibrate(const std::vector<std::string>& corpus, const CalibrationOptions& options);

// "distance,similarity" header then one row per sample, similarity printed
// with 17 significant digits.
std::string samples_csv(const std::vector<SimilaritySample>& samples);
std::string model_json(const SimilarityModel& model);

// Mean similarity per distance decile: samples sorted by distance and cut into
// ten groups at quantile boundaries, keeping equal distances in one group.
struct DecileBin {
  unsigned min_distance = 0;
  unsigned max_distance = 0;
  std::size_t count = 0;
  double mean_similarity = 0.0;
};
std::vector<DecileBin> distance_deciles(std::vector<SimilaritySample> samples);

}  // namespace credetect
