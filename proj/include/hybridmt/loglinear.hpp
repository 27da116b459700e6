#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hybridmt {

class ArpaModel;
class PhraseTable;
class Scorer;

enum class Feature : std::size_t {
  kNmt = 0,            // sum of chosen neural log-probabilities
  kLm,                 // sum of LM log-probabilities
  kWordPenalty,        // target words (word moves only when split)
  kPhraseWordPenalty,  // target words from phrase moves, split mode only
  kPhrasePenalty,      // number of phrases
  kSourceCoverage,     // source words translated by phrases
  kPhraseSourceGivenTarget,  // sum of ln p(f|e)
  kPhraseTargetGivenSource,  // sum of ln p(e|f)
};
inline constexpr std::size_t kNumFeatures = 8;

// Config / n-best names, indexed by Feature.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "nmt", "lm", "wp", "wp_phrase", "pp", "swc", "phr", "iphr"};

std::optional<Feature> feature_from_name(std::string_view name);
inline std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  FeatureVector& operator+=(const FeatureVector& other);
  bool operator==(const FeatureVector&) const = default;
};

struct FeatureWeights {
  std::array<double, kNumFeatures> values{};
  // Word penalty counted separately for words produced by phrases.
  bool split_word_penalty = false;

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }

  static FeatureWeights hybrid_defaults();
  // Neural score only.
  static FeatureWeights pure_nmt();

  // All finite, at least one nonzero.
  void validate() const;

  // `feature_name value` per line, '#' comments. Unlisted features keep
  // `base` values; a `wp_phrase` entry switches on split mode.
  static FeatureWeights parse(std::istream& in, const FeatureWeights& base = hybrid_defaults());
  static FeatureWeights load(const std::filesystem::path& path,
                             const FeatureWeights& base = hybrid_defaults());
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
};

// sum_m lambda_m * h_m
double combine(const FeatureWeights& weights, const FeatureVector& features);

struct DerivationMove {
  enum class Kind { kWord, kPhrase };
  Kind kind = Kind::kWord;
  std::vector<std::string> target;
  // Phrase moves only.
  std::vector<std::string> source;
  std::size_t source_start = 0;
  // Trailing target words not yet emitted; nonzero only for the last move of
  // an unfinished hypothesis.
  std::size_t pending = 0;

  bool is_phrase() const { return kind == Kind::kPhrase; }
  bool operator==(const DerivationMove&) const = default;
};

struct DerivationRecord {
  std::vector<DerivationMove> moves;

  // Concatenated emitted target sides.
  std::vector<std::string> target() const;
  std::size_t num_phrases() const;
  bool operator==(const DerivationRecord&) const = default;
};

struct AuditResult {
  FeatureVector features;
  double score = 0.0;
};

// Models a derivation is scored against. `table` and `lm` may be null; a null
// LM contributes zero, a null table rejects phrase moves.
struct ScoringModels {
  const Scorer* scorer = nullptr;
  const PhraseTable* table = nullptr;
  const ArpaModel* lm = nullptr;
};

// Recomputes every feature of `record` from scratch. Throws Error when a
// phrase move is not in the table or does not match the source.
AuditResult audit_derivation(std::span<const std::string> source, const DerivationRecord& record,
                             const ScoringModels& models, const FeatureWeights& weights);

}  // namespace hybridmt
