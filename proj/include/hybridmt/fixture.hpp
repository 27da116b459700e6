#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hybridmt {

struct FixtureOptions {
  std::uint64_t seed = 1;
  std::size_t sentences = 20;
  std::size_t source_words = 24;
  std::size_t target_words = 24;
  std::size_t min_length = 3;
  std::size_t max_length = 8;
  std::size_t embed = 8;
  std::size_t hidden = 16;
  std::size_t lm_order = 3;
};

// Files of a generated fixture, relative to its directory.
struct FixtureLayout {
  static constexpr const char* kSourceVocab = "source.vocab";
  static constexpr const char* kTargetVocab = "target.vocab";
  static constexpr const char* kModel = "model.bin";
  static constexpr const char* kLanguageModel = "lm.arpa";
  static constexpr const char* kPhraseTable = "phrases.txt";
  static constexpr const char* kWeights = "weights.cfg";
  static constexpr const char* kSource = "source.txt";
  static constexpr const char* kReference = "reference.txt";
};

// Writes a self-consistent world: seeded model weights, vocabularies, a
// normalized backoff LM over the target words, a phrase table derived from a
// hidden word/idiom lexicon, source sentences and their lexicon translations.
void write_fixture(const std::filesystem::path& directory, const FixtureOptions& options);

// ARPA text of a randomly generated backoff model whose conditional
// distributions sum to one over `words` + </s> + <unk> for every history.
std::string generate_normalized_arpa(const std::vector<std::string>& words, std::size_t order,
                                     std::uint64_t seed);

}  // namespace hybridmt
