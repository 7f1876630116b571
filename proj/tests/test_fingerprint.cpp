#include <gtest/gtest.h>
#include <sodium.h>

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "credetect/calibration.hpp"
#include "credetect/fingerprint.hpp"
#include "credetect/rng.hpp"
#include "test_util.hpp"

using namespace credetect;

namespace {

std::array<std::uint8_t, 32> sodium_sha256(std::string_view s) {
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256(out.data(), reinterpret_cast<const unsigned char*>(s.data()), s.size());
  return out;
}

unsigned loop_hamming(std::uint64_t a, std::uint64_t b) {
  unsigned n = 0;
  for (int i = 0; i < 64; ++i) n += ((a >> i) & 1) != ((b >> i) & 1);
  return n;
}

std::string random_text(DeterministicRng& rng, std::size_t n) {
  static constexpr std::string_view kAlpha = "abcdefghijklmnopqrstuvwxyz ";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += kAlpha[rng.uniform(kAlpha.size())];
  s.front() = 'x';
  s.back() = 'y';
  return s;
}

}  // namespace

TEST(HashId, DeterministicAndSensitive) {
  const std::string a = "the quick brown fox";
  EXPECT_EQ(compute_hash_id(a), compute_hash_id(std::string(a)));
  std::string b = a;
  b[4] ^= 0x01;
  EXPECT_NE(compute_hash_id(a), compute_hash_id(b));
}

TEST(HashId, EmptyInputMatchesSecondImplementation) {
  ASSERT_GE(sodium_init(), 0);
  const auto id = compute_hash_id(std::string_view{});
  EXPECT_EQ(id.bytes, sodium_sha256(""));
  EXPECT_EQ(id.hex(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(HashId, RandomInputsMatchSecondImplementation) {
  ASSERT_GE(sodium_init(), 0);
  DeterministicRng rng(7);
  for (int i = 0; i < 200; ++i) {
    Bytes b(rng.uniform(4096));
    rng.fill(b);
    const std::string s = to_string(b);
    EXPECT_EQ(compute_hash_id(s).bytes, sodium_sha256(s));
  }
}

TEST(SimHash, SingleFeatureEqualsFeatureHash) {
  EXPECT_EQ(simhash("abcd").value, feature_hash("abcd"));
  // Repeated single feature under both weightings.
  EXPECT_EQ(simhash("zzzzzzzzzz").value, feature_hash("zzzz"));
  EXPECT_EQ(simhash("zzzzzzzzzz", {4, Weighting::Binary}).value, feature_hash("zzzz"));
  // Shorter than one shingle: the whole text is the feature.
  EXPECT_EQ(simhash("ab").value, feature_hash("ab"));
}

TEST(SimHash, WhitespaceNormalization) {
  EXPECT_EQ(simhash("  hello \t\n world  "), simhash("hello world"));
}

TEST(SimHash, Errors) {
  EXPECT_CODE(simhash("   \n\t "), EmptyInput);
  EXPECT_CODE(simhash(""), EmptyInput);
  EXPECT_CODE(simhash("bad \xff byte"), EncodingError);
  EXPECT_CODE(simhash("overlong \xc0\xaf"), EncodingError);
  EXPECT_CODE(simhash("abc", {0, Weighting::TermFrequency}), ConfigError);
}

TEST(SimHash, Deterministic) {
  const auto corpus = generate_synthetic_corpus(20, 3);
  for (const auto& p : corpus) EXPECT_EQ(simhash(p), simhash(std::string(p)));
}

TEST(SimHash, HexRoundTrip) {
  SimHashValue v{0x0123456789abcdefull};
  EXPECT_EQ(v.hex(), "0123456789abcdef");
  EXPECT_EQ(SimHashValue::from_hex(v.hex()), v);
  EXPECT_CODE(SimHashValue::from_hex("0123456789ABCDEF"), ParseError);
  EXPECT_CODE(SimHashValue::from_hex("0123"), ParseError);
}

TEST(Hamming, Examples) {
  EXPECT_EQ(hamming_distance({0}, {0}).value, 0u);
  EXPECT_EQ(hamming_distance({0}, {~0ull}).value, 64u);
  EXPECT_EQ(hamming_distance({0b1011}, {0b0110}).value, 3u);
}

TEST(Hamming, MetricAxiomsAndLoopOracle) {
  DeterministicRng rng(11);
  for (int i = 0; i < 10000; ++i) {
    SimHashValue a{rng.next()}, b{rng.next()}, c{rng.next()};
    if (i % 3 == 0) b.value = a.value ^ (std::uint64_t{1} << rng.uniform(64));
    const auto ab = hamming_distance(a, b).value;
    const auto bc = hamming_distance(b, c).value;
    const auto ac = hamming_distance(a, c).value;
    ASSERT_EQ(hamming_distance(a, a).value, 0u);
    ASSERT_EQ(ab, hamming_distance(b, a).value);
    ASSERT_LE(ac, ab + bc);
    ASSERT_LE(ab, 64u);
    ASSERT_EQ(ab, loop_hamming(a.value, b.value));
  }
}

TEST(ReferenceSimilarity, IdentityAndDisjoint) {
  const std::string t = "some ordinary sentence of text";
  EXPECT_DOUBLE_EQ(reference_similarity(t, t), 1.0);
  EXPECT_DOUBLE_EQ(reference_similarity("aaaaaa", "bbbbbb"), 0.0);
  EXPECT_DOUBLE_EQ(reference_similarity("abcdef", "uvwxyz"), 0.0);
}

TEST(ReferenceSimilarity, HandEnumeratedShingles) {
  // {abc,bcd} vs {bcd,cde}: 1 shared of 3.
  EXPECT_DOUBLE_EQ(reference_similarity("abcd", "bcde"), 1.0 / 3.0);
  // "banana" -> {ban,ana,nan}; "bandana" -> {ban,and,nda,dan,ana}: 2 shared of 6.
  EXPECT_DOUBLE_EQ(reference_similarity("banana", "bandana"), 2.0 / 6.0);
  // Normalization collapses the whitespace before shingling.
  EXPECT_DOUBLE_EQ(reference_similarity("ab  cd", "ab cd"), 1.0);
}

TEST(ReferenceSimilarity, MatchesSetOracleOnRandomPairs) {
  DeterministicRng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_text(rng, 3 + rng.uniform(40));
    const auto b = random_text(rng, 3 + rng.uniform(40));
    auto grams = [](const std::string& s) {
      std::set<std::string> g;
      for (std::size_t k = 0; k + 3 <= s.size(); ++k) g.insert(s.substr(k, 3));
      return g;
    };
    // random_text never emits runs of spaces or edge spaces, so it is already normalized
    if (a.find("  ") != std::string::npos || b.find("  ") != std::string::npos) continue;
    const auto ga = grams(a), gb = grams(b);
    std::size_t common = 0;
    for (const auto& g : ga) common += gb.count(g);
    const double oracle = double(common) / double(ga.size() + gb.size() - common);
    EXPECT_DOUBLE_EQ(reference_similarity(a, b), oracle) << a << " | " << b;
  }
}

TEST(Perturb, DeterministicPerSeed) {
  const std::string t(300, 'q');
  EXPECT_EQ(perturb_text(t, 0.1, 42), perturb_text(t, 0.1, 42));
  EXPECT_NE(perturb_text(t, 0.1, 42), perturb_text(t, 0.1, 43));
}

TEST(Perturb, Errors) {
  EXPECT_CODE(perturb_text("abc", 0.0, 1), ConfigError);
  EXPECT_CODE(perturb_text("abc", 1.5, 1), ConfigError);
  EXPECT_CODE(perturb_text("", 0.5, 1), EmptyInput);
}

TEST(Perturb, SingleEditOnLongTextStaysSimilar) {
  DeterministicRng rng(8);
  for (int s = 0; s < 20; ++s) {
    const auto t = random_text(rng, 1000);
    const auto p = perturb_text(t, 0.001, s);  // ceil(0.001 * 1000) = 1 edit
    EXPECT_GT(reference_similarity(t, p), 0.95);
  }
}

TEST(Perturb, FullRateDestroysSimilarity) {
  DeterministicRng rng(9);
  const auto t = random_text(rng, 100);
  double total = 0;
  for (int s = 0; s < 100; ++s) {
    const double sim = reference_similarity(t, perturb_text(t, 1.0, s));
    EXPECT_LT(sim, 0.5) << "seed " << s;
    total += sim;
  }
  EXPECT_LT(total / 100, 0.5);
}

TEST(Model, ExactLinearData) {
  std::vector<SimilaritySample> s;
  for (unsigned d = 0; d <= 64; d += 4) s.push_back({{d}, 1.0 - d / 64.0});
  const auto m = fit_similarity_model(s);
  EXPECT_NEAR(m.slope, -1.0 / 64, 1e-15);
  EXPECT_NEAR(m.intercept, 1.0, 1e-15);
  EXPECT_NEAR(m.r_squared, 1.0, 1e-12);
  EXPECT_EQ(m.sample_count, s.size());
}

TEST(Model, ConstantResponse) {
  std::vector<SimilaritySample> s{{{1}, 0.3}, {{5}, 0.3}, {{9}, 0.3}};
  const auto m = fit_similarity_model(s);
  EXPECT_EQ(m.slope, 0.0);
  EXPECT_DOUBLE_EQ(m.intercept, 0.3);
}

TEST(Model, DegenerateSamples) {
  std::vector<SimilaritySample> same{{{3}, 0.1}, {{3}, 0.9}};
  EXPECT_CODE(fit_similarity_model(same), DegenerateSamples);
  std::vector<SimilaritySample> one{{{3}, 0.1}};
  EXPECT_CODE(fit_similarity_model(one), DegenerateSamples);
  std::vector<SimilaritySample> out_of_range{{{3}, 0.1}, {{4}, 1.5}};
  EXPECT_CODE(fit_similarity_model(out_of_range), DegenerateSamples);
}

TEST(Model, RandomCloudMatchesNormalEquations) {
  DeterministicRng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng.uniform(500);
    std::vector<SimilaritySample> s(n);
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i].distance.value = static_cast<unsigned>(rng.uniform(65));
      s[i].similarity = rng.uniform_real();
      X(i, 0) = 1.0;
      X(i, 1) = s[i].distance.value;
      y(i) = s[i].similarity;
    }
    s[0].distance.value = 0;
    X(0, 1) = 0;
    s[1].distance.value = 64;
    X(1, 1) = 64;
    const Eigen::Vector2d beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    const auto m = fit_similarity_model(s);
    EXPECT_NEAR(m.intercept, beta(0), 1e-9);
    EXPECT_NEAR(m.slope, beta(1), 1e-9);
    const Eigen::VectorXd resid = y - X * beta;
    const double r2 = 1.0 - resid.squaredNorm() / (y.array() - y.mean()).square().sum();
    EXPECT_NEAR(m.r_squared, std::max(0.0, r2), 1e-9);
  }
}

TEST(Model, PredictExamples) {
  SimilarityModel m{-1.0 / 64, 1.0, 1.0, 0};
  EXPECT_DOUBLE_EQ(predict_similarity(m, {0}), 1.0);
  EXPECT_DOUBLE_EQ(predict_similarity(m, {64}), 0.0);
  EXPECT_DOUBLE_EQ(predict_similarity(m, {16}), 0.75);
}

TEST(Threshold, CalibrateExamples) {
  SimilarityModel m{-1.0 / 64, 1.0, 1.0, 0};
  EXPECT_EQ(calibrate_threshold(m, 0.875).theta(), 8u);
  EXPECT_EQ(calibrate_threshold(m, 1.0).theta(), 0u);
  EXPECT_EQ(calibrate_threshold(m, 0.01).theta(), 63u);
}

TEST(Threshold, CalibrateErrors) {
  EXPECT_CODE(calibrate_threshold({0.01, 0.9, 0, 0}, 0.8), NonDecreasingModel);
  EXPECT_CODE(calibrate_threshold({0.0, 0.9, 0, 0}, 0.8), NonDecreasingModel);
  EXPECT_CODE(calibrate_threshold({-0.01, 0.7, 0, 0}, 0.8), UnattainableSimilarity);
  EXPECT_CODE(calibrate_threshold({-0.01, 0.9, 0, 0}, 0.0), ConfigError);
}

TEST(Threshold, CalibrateMatchesExhaustiveScanOnRandomModels) {
  DeterministicRng rng(31);
  for (int i = 0; i < 2000; ++i) {
    SimilarityModel m{-(rng.uniform_real() * 0.1 + 1e-4), 0.8 + 0.2 * rng.uniform_real(), 0, 0};
    const double min_sim = 0.5 + 0.3 * rng.uniform_real();
    unsigned oracle = 0;
    for (unsigned t = 0; t <= 64; ++t)
      if (m.slope * t + m.intercept >= min_sim) oracle = t;
    EXPECT_EQ(calibrate_threshold(m, min_sim).theta(), oracle);
  }
}

TEST(Threshold, InclusiveAndBounded) {
  Threshold t(5);
  EXPECT_TRUE(t.admits({5}));
  EXPECT_FALSE(t.admits({6}));
  EXPECT_EQ(Threshold().theta(), Threshold::kDefault);
  EXPECT_CODE(Threshold(65), ConfigError);
  EXPECT_NO_THROW(Threshold(64));
}

TEST(Pearson, Basics) {
  std::vector<SimilaritySample> s{{{0}, 1.0}, {{10}, 0.5}, {{20}, 0.0}};
  EXPECT_NEAR(pearson_correlation(s), -1.0, 1e-12);
  std::vector<SimilaritySample> flat{{{0}, 0.5}, {{10}, 0.5}};
  EXPECT_TRUE(std::isnan(pearson_correlation(flat)));
}

TEST(Weighting, Names) {
  EXPECT_EQ(weighting_from_string("tf"), Weighting::TermFrequency);
  EXPECT_EQ(weighting_from_string(to_string(Weighting::Binary)), Weighting::Binary);
  EXPECT_CODE(weighting_from_string("idf"), ConfigError);
}
