#include "hybridmt/loglinear.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hybridmt/common.hpp"
#include "hybridmt/ngram_lm.hpp"
#include "hybridmt/phrase_table.hpp"
#include "hybridmt/scorer.hpp"
#include "hybridmt/vocabulary.hpp"

namespace hybridmt {

std::optional<Feature> feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

FeatureVector& FeatureVector::operator+=(const FeatureVector& other) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) values[i] += other.values[i];
  return *this;
}

FeatureWeights FeatureWeights::hybrid_defaults() {
  FeatureWeights w;
  w[Feature::kNmt] = 1.0;
  w[Feature::kLm] = 0.5;
  w[Feature::kWordPenalty] = 0.5;
  w[Feature::kPhrasePenalty] = 0.0;
  w[Feature::kSourceCoverage] = 0.5;
  w[Feature::kPhraseSourceGivenTarget] = 0.2;
  w[Feature::kPhraseTargetGivenSource] = 0.2;
  return w;
}

FeatureWeights FeatureWeights::pure_nmt() {
  FeatureWeights w;
  w[Feature::kNmt] = 1.0;
  return w;
}

void FeatureWeights::validate() const {
  bool any = false;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(values[i])) {
      throw ConfigError("weight " + std::string(kFeatureNames[i]) + " is not finite");
    }
    any = any || values[i] != 0.0;
  }
  if (!any) throw ConfigError("all feature weights are zero");
}

FeatureWeights FeatureWeights::parse(std::istream& in, const FeatureWeights& base) {
  FeatureWeights w = base;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto fields = split_tokens(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      throw FormatError("weight config line " + std::to_string(line_no) + ": expected 'name value'");
    }
    const auto feature = feature_from_name(fields[0]);
    if (!feature) {
      throw FormatError("weight config line " + std::to_string(line_no) + ": unknown feature '" +
                        fields[0] + "'");
    }
    std::istringstream value_in(fields[1]);
    double value = 0.0;
    if (!(value_in >> value) || !value_in.eof()) {
      throw FormatError("weight config line " + std::to_string(line_no) + ": malformed value '" +
                        fields[1] + "'");
    }
    w[*feature] = value;
    if (*feature == Feature::kPhraseWordPenalty) w.split_word_penalty = true;
  }
  w.validate();
  return w;
}

FeatureWeights FeatureWeights::load(const std::filesystem::path& path, const FeatureWeights& base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open weight config " + path.string());
  try {
    return parse(in, base);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void FeatureWeights::write(std::ostream& out) const {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (static_cast<Feature>(i) == Feature::kPhraseWordPenalty && !split_word_penalty) continue;
    out << kFeatureNames[i] << ' ' << format_double(values[i]) << '\n';
  }
}

void FeatureWeights::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
}

double combine(const FeatureWeights& weights, const FeatureVector& features) {
  double total = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) total += weights.values[i] * features.values[i];
  return total;
}

std::vector<std::string> DerivationRecord::target() const {
  std::vector<std::string> out;
  for (const auto& m : moves) {
    out.insert(out.end(), m.target.begin(), m.target.end() - static_cast<std::ptrdiff_t>(m.pending));
  }
  return out;
}

std::size_t DerivationRecord::num_phrases() const {
  std::size_t n = 0;
  for (const auto& m : moves) n += m.is_phrase() ? 1 : 0;
  return n;
}

AuditResult audit_derivation(std::span<const std::string> source, const DerivationRecord& record,
                             const ScoringModels& models, const FeatureWeights& weights) {
  if (models.scorer == nullptr) throw ConfigError("audit needs a scorer");
  const Vocabulary& vocab = models.scorer->target_vocabulary();
  const auto sentence = models.scorer->bind(source);
  StateHandle state = sentence->initial_state();
  TokenId prev = Vocabulary::kBegin;
  LmHistory history;
  if (models.lm != nullptr) history = models.lm->begin_sentence();

  AuditResult result;
  FeatureVector& f = result.features;

  auto score_neural = [&](const std::string& word) {
    StepOutput out = sentence->step(state, prev);
    const TokenId id = vocab.index(word);
    f[Feature::kNmt] += out.log_probs[id];
    state = std::move(out.next_state);
    prev = id;
  };

  for (std::size_t m = 0; m < record.moves.size(); ++m) {
    const DerivationMove& move = record.moves[m];
    if (move.target.empty()) throw Error("derivation move " + std::to_string(m) + " has no target");
    if (!move.is_phrase()) {
      if (move.target.size() != 1 || move.pending != 0) {
        throw Error("word move " + std::to_string(m) + " must have exactly one target token");
      }
      score_neural(move.target[0]);
      if (models.lm != nullptr) {
        const LmWordId w = models.lm->index(move.target[0]);
        f[Feature::kLm] += models.lm->score_word(history, w);
        history = models.lm->extend(history, w);
      }
      f[Feature::kWordPenalty] += 1.0;
      continue;
    }

    if (move.source.empty() || move.source_start + move.source.size() > source.size() ||
        !std::equal(move.source.begin(), move.source.end(),
                    source.begin() + static_cast<std::ptrdiff_t>(move.source_start))) {
      throw Error("phrase move " + std::to_string(m) + " does not match the source sentence");
    }
    const PhrasePair* pair =
        models.table != nullptr ? models.table->find(move.source, move.target) : nullptr;
    if (pair == nullptr) {
      throw Error("phrase pair '" + join_tokens(move.source) + " ||| " + join_tokens(move.target) +
                  "' is not in the phrase table");
    }
    if (models.lm != nullptr) {
      std::vector<LmWordId> ids;
      for (const auto& w : move.target) ids.push_back(models.lm->index(w));
      f[Feature::kLm] += models.lm->score_phrase(history, ids, &history);
    }
    if (move.pending >= move.target.size() || (move.pending > 0 && m + 1 != record.moves.size())) {
      throw Error("phrase move " + std::to_string(m) + " has an invalid pending count");
    }
    for (std::size_t k = 0; k + move.pending < move.target.size(); ++k) score_neural(move.target[k]);
    const auto words = static_cast<double>(move.target.size());
    f[weights.split_word_penalty ? Feature::kPhraseWordPenalty : Feature::kWordPenalty] += words;
    f[Feature::kPhrasePenalty] += 1.0;
    f[Feature::kSourceCoverage] += static_cast<double>(move.source.size());
    f[Feature::kPhraseSourceGivenTarget] += pair->log_p_source_given_target;
    f[Feature::kPhraseTargetGivenSource] += pair->log_p_target_given_source;
  }
  result.score = combine(weights, f);
  return result;
}

}  // namespace hybridmt
