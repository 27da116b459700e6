#include "hybridmt/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "hybridmt/common.hpp"
#include "hybridmt/loglinear.hpp"
#include "hybridmt/nmt_model.hpp"
#include "hybridmt/vocabulary.hpp"

namespace hybridmt {

namespace {

using Gram = std::vector<std::string>;

struct ArpaEntry {
  double prob = 0.0;
  double backoff = 1.0;
};

// Conditional probability under a partially built model (plain backoff recursion).
double conditional(const std::vector<std::map<Gram, ArpaEntry>>& grams, Gram history, const std::string& word) {
  double factor = 1.0;
  while (true) {
    Gram full = history;
    full.push_back(word);
    const auto& table = grams[full.size() - 1];
    if (auto it = table.find(full); it != table.end()) return factor * it->second.prob;
    if (history.empty()) return 0.0;
    const auto& ctx = grams[history.size() - 1];
    if (auto it = ctx.find(history); it != ctx.end()) factor *= it->second.backoff;
    history.erase(history.begin());
  }
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) total += (v = unit(rng));
  for (auto& v : p) v /= total;
  return p;
}

std::string log10_text(double p) {
  std::ostringstream out;
  out << std::setprecision(17) << std::log10(p);
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

std::string generate_normalized_arpa(const std::vector<std::string>& words, std::size_t order,
                                     std::uint64_t seed) {
  if (order < 1) throw ConfigError("LM order must be >= 1");
  if (words.empty()) throw ConfigError("LM vocabulary must not be empty");
  std::mt19937_64 rng(seed);
  std::vector<std::string> predicted = words;
  predicted.emplace_back(kSentenceEnd);
  predicted.emplace_back(kUnknownWord);

  std::vector<std::map<Gram, ArpaEntry>> grams(order);
  const auto unigram = random_distribution(rng, predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) grams[0][{predicted[i]}].prob = unigram[i];

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t max_successors = std::min<std::size_t>(3, predicted.size() - 1);
  for (std::size_t m = 2; m <= order; ++m) {
    std::vector<Gram> contexts;
    if (m == 2) contexts.push_back({std::string(kSentenceBegin)});
    for (const auto& [gram, entry] : grams[m - 2]) {
      if (gram.back() != kSentenceEnd) contexts.push_back(gram);
    }
    for (const auto& context : contexts) {
      if (unit(rng) > 0.6) continue;
      std::vector<std::size_t> pick(predicted.size());
      for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
      std::shuffle(pick.begin(), pick.end(), rng);
      const std::size_t count = 1 + static_cast<std::size_t>(unit(rng) * max_successors) % max_successors;
      const double mass = 0.3 + 0.5 * unit(rng);
      const auto shares = random_distribution(rng, count);
      const Gram lower(context.begin() + 1, context.end());
      double remaining_lower = 1.0;
      for (std::size_t k = 0; k < count; ++k) {
        const auto& word = predicted[pick[k]];
        remaining_lower -= conditional(grams, lower, word);
        Gram full = context;
        full.push_back(word);
        grams[m - 1][full].prob = mass * shares[k];
      }
      // <s> only occurs as a unigram context; it needs an entry to carry the backoff.
      if (context.size() == 1 && context[0] == kSentenceBegin) grams[0][context].prob = 0.0;
      grams[context.size() - 1][context].backoff = (1.0 - mass) / remaining_lower;
    }
  }

  std::ostringstream out;
  out << "\\data\\\n";
  for (std::size_t m = 1; m <= order; ++m) out << "ngram " << m << '=' << grams[m - 1].size() << '\n';
  for (std::size_t m = 1; m <= order; ++m) {
    out << "\n\\" << m << "-grams:\n";
    for (const auto& [gram, entry] : grams[m - 1]) {
      out << (entry.prob > 0.0 ? log10_text(entry.prob) : std::string("-99")) << '\t' << join_tokens(gram);
      if (m < order) out << '\t' << log10_text(entry.backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

void write_fixture(const std::filesystem::path& directory, const FixtureOptions& o) {
  if (o.source_words < 2 || o.target_words < 4) throw ConfigError("fixture vocabularies are too small");
  if (o.min_length < 1 || o.min_length > o.max_length) throw ConfigError("bad fixture length range");
  std::filesystem::create_directories(directory);
  std::mt19937_64 rng(o.seed);

  std::vector<std::string> source_words, target_words;
  for (std::size_t i = 0; i < o.source_words; ++i) source_words.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < o.target_words; ++i) target_words.push_back("t" + std::to_string(i));

  // Hidden lexicon: every source word has one true translation; a few source
  // bigrams are idioms with a non-compositional translation.
  std::vector<std::size_t> lexicon(o.source_words);
  for (auto& t : lexicon) t = std::uniform_int_distribution<std::size_t>(0, o.target_words - 1)(rng);
  std::map<Gram, Gram> idioms;
  for (int k = 0; k < 3; ++k) {
    std::uniform_int_distribution<std::size_t> src(0, o.source_words - 1), tgt(0, o.target_words - 1);
    Gram source{source_words[src(rng)], source_words[src(rng)]};
    Gram target{target_words[tgt(rng)]};
    if (k == 2) target.push_back(target_words[tgt(rng)]);
    idioms.emplace(std::move(source), std::move(target));
  }

  std::ostringstream sources, references;
  std::map<Gram, Gram> seen_phrases;
  std::uniform_int_distribution<std::size_t> length(o.min_length, o.max_length);
  std::uniform_int_distribution<std::size_t> any_word(0, o.source_words - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < o.sentences; ++s) {
    Gram sentence;
    const std::size_t n = length(rng);
    while (sentence.size() < n) {
      if (n - sentence.size() >= 2 && unit(rng) < 0.15) {
        auto it = idioms.begin();
        std::advance(it, static_cast<long>(any_word(rng) % idioms.size()));
        sentence.insert(sentence.end(), it->first.begin(), it->first.end());
      } else {
        sentence.push_back(source_words[any_word(rng)]);
      }
    }
    Gram reference;
    Gram plain_source, plain_target;  // current run of word-by-word translations
    auto flush = [&] {
      for (std::size_t len = 2; len <= 3; ++len) {
        for (std::size_t i = 0; i + len <= plain_source.size(); ++i) {
          seen_phrases[Gram(plain_source.begin() + i, plain_source.begin() + i + len)] =
              Gram(plain_target.begin() + i, plain_target.begin() + i + len);
        }
      }
      plain_source.clear();
      plain_target.clear();
    };
    for (std::size_t i = 0; i < sentence.size();) {
      if (i + 1 < sentence.size()) {
        if (auto it = idioms.find({sentence[i], sentence[i + 1]}); it != idioms.end()) {
          reference.insert(reference.end(), it->second.begin(), it->second.end());
          flush();
          i += 2;
          continue;
        }
      }
      const auto& word = target_words[lexicon[std::stoul(sentence[i].substr(1))]];
      reference.push_back(word);
      plain_source.push_back(sentence[i]);
      plain_target.push_back(word);
      ++i;
    }
    flush();
    sources << join_tokens(sentence) << '\n';
    references << join_tokens(reference) << '\n';
  }

  std::ostringstream phrases;
  phrases << std::setprecision(6);
  std::uniform_int_distribution<std::size_t> any_target(0, o.target_words - 1);
  for (std::size_t i = 0; i < o.source_words; ++i) {
    phrases << source_words[i] << " ||| " << target_words[lexicon[i]] << " ||| 0.6 0.7\n";
    for (int d = 0; d < 2; ++d) {
      const std::size_t t = any_target(rng);
      if (t == lexicon[i]) continue;
      phrases << source_words[i] << " ||| " << target_words[t] << " ||| " << 0.05 + 0.1 * unit(rng) << ' '
              << 0.05 + 0.1 * unit(rng) << '\n';
    }
  }
  for (const auto& [source, target] : seen_phrases) {
    if (idioms.count(source)) continue;
    phrases << join_tokens(source) << " ||| " << join_tokens(target) << " ||| 0.5 0.5\n";
  }
  for (const auto& [source, target] : idioms) {
    phrases << join_tokens(source) << " ||| " << join_tokens(target) << " ||| 0.8 0.9\n";
  }

  const auto source_vocab = Vocabulary::from_words(source_words);
  const auto target_vocab = Vocabulary::from_words(target_words);
  source_vocab.save(directory / FixtureLayout::kSourceVocab);
  target_vocab.save(directory / FixtureLayout::kTargetVocab);
  nmt::ModelDims dims{o.embed, o.hidden, source_vocab.size(), target_vocab.size()};
  // Untrained weights give near-uniform attention and rarely pick </s> after
  // the first step; sharpen the one and boost the other.
  auto model = nmt::random_weights(dims, o.seed);
  model.attention_vector = (model.attention_vector * 8.0).cast<float>().cast<double>();
  model.output_bias(Vocabulary::kEnd) = static_cast<float>(model.output_bias(Vocabulary::kEnd) + 2.0);
  nmt::save_weights(model, directory / FixtureLayout::kModel);
  write_text(directory / FixtureLayout::kLanguageModel,
             generate_normalized_arpa(target_words, o.lm_order, o.seed ^ 0x9e3779b97f4a7c15ULL));
  write_text(directory / FixtureLayout::kPhraseTable, phrases.str());
  FeatureWeights weights = FeatureWeights::hybrid_defaults();
  weights[Feature::kWordPenalty] = 4.0;
  weights[Feature::kSourceCoverage] = 3.0;
  weights[Feature::kPhraseSourceGivenTarget] = 0.5;
  weights[Feature::kPhraseTargetGivenSource] = 0.5;
  weights.save(directory / FixtureLayout::kWeights);
  write_text(directory / FixtureLayout::kSource, sources.str());
  write_text(directory / FixtureLayout::kReference, references.str());
}

}  // namespace hybridmt
