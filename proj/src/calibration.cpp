#include "credetect/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "credetect/errors.hpp"
#include "credetect/rng.hpp"
#include "credetect/text.hpp"

namespace credetect {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFunctionWords[] = {
    "the",  "of",    "and",   "to",    "in",    "a",    "is",    "that",  "for",   "it",
    "as",   "was",   "with",  "be",    "by",    "on",   "not",   "he",    "this",  "are",
    "or",   "his",   "from",  "at",    "which", "but",  "have",  "an",    "had",   "they",
    "you",  "were",  "their", "one",   "all",   "we",   "can",   "her",   "has",   "there",
    "been", "if",    "more",  "when",  "will",  "would", "who",  "so"};

constexpr std::string_view kContentWords[] = {
    "river",     "mountain",  "village",   "harbor",    "forest",    "winter",    "summer",
    "market",    "church",    "castle",    "garden",    "valley",    "bridge",    "road",
    "field",     "house",     "window",    "door",      "table",     "letter",    "book",
    "paper",     "story",     "music",     "song",      "voice",     "silence",   "light",
    "shadow",    "fire",      "water",     "stone",     "iron",      "gold",      "silver",
    "bread",     "wine",      "horse",     "dog",       "bird",      "ship",      "sail",
    "wind",      "storm",     "rain",      "snow",      "cloud",     "star",      "moon",
    "morning",   "evening",   "night",     "day",       "year",      "century",   "hour",
    "king",      "queen",     "soldier",   "farmer",    "merchant",  "doctor",    "teacher",
    "student",   "child",     "mother",    "father",    "brother",   "sister",    "friend",
    "stranger",  "neighbor",  "captain",   "servant",   "judge",     "priest",    "painter",
    "writer",    "council",   "court",     "army",      "law",       "trade",     "money",
    "price",     "debt",      "tax",       "wage",      "harvest",   "grain",     "cattle",
    "mill",      "factory",   "machine",   "engine",    "railway",   "station",   "train",
    "carriage",  "journey",   "travel",    "voyage",    "island",    "coast",     "ocean",
    "desert",    "plain",     "hill",      "lake",      "stream",    "meadow",    "orchard",
    "apple",     "flower",    "rose",      "oak",       "pine",      "leaf",      "root",
    "seed",      "soil",      "dust",      "smoke",     "ash",       "glass",     "mirror",
    "candle",    "lamp",      "clock",     "bell",      "tower",     "wall",      "gate",
    "street",    "square",    "city",      "town",      "county",    "province",  "nation",
    "empire",    "republic",  "war",       "peace",     "treaty",    "battle",    "victory",
    "defeat",    "honor",     "duty",      "faith",     "hope",      "fear",      "anger",
    "grief",     "joy",       "pride",     "shame",     "love",      "memory",    "dream",
    "thought",   "idea",      "reason",    "truth",     "doubt",     "question",  "answer",
    "problem",   "method",    "theory",    "experiment", "science",  "history",   "language",
    "grammar",   "poem",      "novel",     "chapter",   "page",      "word",      "sentence",
    "meaning",   "spirit",    "body",      "heart",     "hand",      "eye",       "face",
    "head",      "shoulder",  "foot",      "blood",     "bone",      "breath",    "sleep",
    "hunger",    "thirst",    "health",    "illness",   "fever",     "medicine",  "cure",
    "walked",    "spoke",     "wrote",     "carried",   "opened",    "closed",    "watched",
    "waited",    "followed",  "returned",  "remained",  "believed",  "remembered", "forgot",
    "built",     "broke",     "crossed",   "climbed",   "fell",      "rose",      "turned",
    "found",     "lost",      "gave",      "took",      "sold",      "bought",    "paid",
    "owed",      "promised",  "refused",   "accepted",  "answered",  "asked",     "told",
    "heard",     "saw",       "felt",      "knew",      "thought",   "seemed",    "became",
    "old",       "young",     "new",       "ancient",   "modern",    "quiet",     "loud",
    "bright",    "dark",      "cold",      "warm",      "heavy",     "light",     "narrow",
    "wide",      "deep",      "shallow",   "long",      "short",     "great",     "small",
    "rich",      "poor",      "proud",     "humble",    "strange",   "familiar",  "simple",
    "careful",   "gentle",    "bitter",    "sweet",     "empty",     "full",      "broken",
    "golden",    "green",     "grey",      "white",     "black",     "red",       "blue",
    "slowly",    "quickly",   "often",     "never",     "always",    "again",     "already",
    "almost",    "perhaps",   "together",  "alone",     "afterwards", "before",   "beneath",
    "beyond",    "within",    "without",   "across",    "along",     "toward",    "against",
    "between",   "through",   "under",     "over",      "behind",    "near",      "far",
    "north",     "south",     "east",      "west",      "distant",   "nearby",    "hidden",
    "open",      "secret",    "public",    "private",   "common",    "rare",      "certain",
    "sudden",    "final",     "first",     "second",    "third",     "last",      "next",
    "many",      "few",       "several",   "every",     "each",      "other",     "same",
    "another",   "such",      "little",    "much",      "enough",    "whole",     "half"};

// Zipf-like draw over [0, n): rank r has weight 1/(r+1).
std::size_t zipf(DeterministicRng& rng, std::size_t n) {
  double total = 0;
  for (std::size_t r = 0; r < n; ++r) total += 1.0 / static_cast<double>(r + 1);
  double u = rng.uniform_real() * total;
  for (std::size_t r = 0; r < n; ++r) {
    u -= 1.0 / static_cast<double>(r + 1);
    if (u < 0) return r;
  }
  return n - 1;
}

std::vector<std::string> split_paragraphs(const std::string& content) {
  std::vector<std::string> out;
  std::istringstream in(content);
  std::string line, current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(current);
    current.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (!current.empty()) current.push_back('\n');
    current += line;
  }
  flush();
  return out;
}

}  // namespace

std::vector<std::string> load_corpus(const fs::path& dir, std::size_t min_chars) {
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::IoError, "corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<std::string> paragraphs;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    for (auto& p : split_paragraphs(buf.str())) {
      // Invalid UTF-8 surfaces here rather than mid-calibration.
      if (text::normalize(text::decode_utf8(p)).size() >= min_chars) paragraphs.push_back(std::move(p));
    }
  }
  return paragraphs;
}

std::vector<std::string> generate_synthetic_corpus(std::size_t paragraphs, std::uint64_t seed) {
  DeterministicRng rng(seed);
  std::vector<std::string> out;
  out.reserve(paragraphs);
  constexpr std::size_t kTopicSize = 40;
  for (std::size_t p = 0; p < paragraphs; ++p) {
    // Each paragraph favors its own random slice of the content vocabulary.
    std::vector<std::size_t> topic(kTopicSize);
    for (auto& t : topic) t = rng.uniform(std::size(kContentWords));

    std::string para;
    const auto sentences = 6 + rng.uniform(7);
    for (std::size_t s = 0; s < sentences; ++s) {
      const auto words = 7 + rng.uniform(10);
      for (std::size_t w = 0; w < words; ++w) {
        std::string_view word;
        const double u = rng.uniform_real();
        if (u < 0.40)
          word = kFunctionWords[zipf(rng, std::size(kFunctionWords))];
        else if (u < 0.85)
          word = kContentWords[topic[zipf(rng, kTopicSize)]];
        else
          word = kContentWords[rng.uniform(std::size(kContentWords))];
        if (!para.empty()) para.push_back(' ');
        std::string token(word);
        if (w == 0) token[0] = static_cast<char>(token[0] - 'a' + 'A');
        para += token;
        if (w + 1 == words) para.push_back('.');
        else if (rng.uniform(12) == 0) para.push_back(',');
      }
    }
    out.push_back(std::move(para));
  }
  return out;
}

void write_corpus(const fs::path& dir, const std::vector<std::string>& paragraphs) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "corpus_%05zu.txt", i);
    std::ofstream out(dir / name, std::ios::binary);
    out << paragraphs[i] << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
  }
}

std::vector<SimilaritySample> CalibrationResult::samples() const {
  std::vector<SimilaritySample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.sample);
  return out;
}

std::vector<SamplePair> build_sample_pairs(const std::vector<std::string>& corpus,
                                           const CalibrationOptions& options) {
  if (corpus.size() < 2 || corpus.size() < options.n_base)
    throw Error(ErrorCode::CorpusTooSmall, "corpus has " + std::to_string(corpus.size()) +
                                               " usable paragraphs, need " +
                                               std::to_string(std::max<std::size_t>(options.n_base, 2)));
  if (!(options.max_edit_rate > 0.0 && options.max_edit_rate <= 1.0))
    throw Error(ErrorCode::ConfigError, "max_edit_rate must be in (0, 1]");

  DeterministicRng rng(options.seed);
  std::vector<SamplePair> pairs;
  pairs.reserve(options.n_base + options.n_perturbed);

  // Base sample points: every selected paragraph against the registry copy of
  // itself.
  for (std::size_t i = 0; i < options.n_base; ++i) pairs.push_back({i, i, 0.0, {}});

  // Enhanced sample points: distinct base paragraphs (drawn without
  // replacement while the pool lasts) against a randomly edited copy.
  const std::size_t pool = options.n_base > 0 ? options.n_base : corpus.size();
  std::vector<std::size_t> order(pool);
  for (std::size_t i = 0; i < pool; ++i) order[i] = i;
  for (std::size_t k = 0; k < options.n_perturbed; ++k) {
    const std::size_t slot = k % pool;
    if (slot == 0) {
      for (std::size_t i = pool; i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);
    }
    const double rate = options.max_edit_rate * (1.0 - rng.uniform_real());
    pairs.push_back({order[slot], order[slot], rate, {}});
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto& p = pairs[k];
    const std::string& a = corpus[p.left];
    const std::string b =
        p.edit_rate > 0.0 ? perturb_text(a, p.edit_rate, options.seed ^ (0x9e3779b97f4a7c15ull * (k + 1)))
                          : corpus[p.right];
    p.sample.distance = hamming_distance(simhash(a, options.params), simhash(b, options.params));
    p.sample.similarity = reference_similarity(a, b);
  }
  return pairs;
}

CalibrationResult calibrate(const std::vector<std::string>& corpus, const CalibrationOptions& options) {
  CalibrationResult r;
  r.pairs = build_sample_pairs(corpus, options);
  const auto samples = r.samples();
  r.model = fit_similarity_model(samples);
  r.threshold = calibrate_threshold(r.model, options.min_pirate_similarity);
  r.pearson_r = pearson_correlation(samples);
  return r;
}

std::string samples_csv(const std::vector<SimilaritySample>& samples) {
  std::string out = "distance,similarity\n";
  char buf[64];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%u,%.17g\n", s.distance.value, s.similarity);
    out += buf;
  }
  return out;
}

std::string model_json(const SimilarityModel& model) {
  nlohmann::ordered_json j;
  j["slope"] = model.slope;
  j["intercept"] = model.intercept;
  j["r_squared"] = model.r_squared;
  j["sample_count"] = model.sample_count;
  return j.dump(2) + "\n";
}

std::vector<DecileBin> distance_deciles(std::vector<SimilaritySample> samples) {
  std::vector<DecileBin> bins;
  if (samples.empty()) return bins;
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.distance < b.distance; });
  const std::size_t n = samples.size();
  std::size_t i = 0;
  int current = -1;
  double sum = 0;
  while (i < n) {
    // A run of equal distances joins the decile of its first member.
    std::size_t end = i;
    while (end < n && samples[end].distance == samples[i].distance) ++end;
    const int decile = static_cast<int>(10 * i / n);
    if (decile != current) {
      if (!bins.empty()) bins.back().mean_similarity = sum / static_cast<double>(bins.back().count);
      bins.push_back({samples[i].distance.value, samples[i].distance.value, 0, 0.0});
      sum = 0;
      current = decile;
    }
    for (std::size_t k = i; k < end; ++k) sum += samples[k].similarity;
    bins.back().count += end - i;
    bins.back().max_distance = samples[i].distance.value;
    i = end;
  }
  bins.back().mean_similarity = sum / static_cast<double>(bins.back().count);
  return bins;
}

}  // namespace credetect
