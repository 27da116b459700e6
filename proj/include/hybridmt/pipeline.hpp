#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hybridmt/ngram_lm.hpp"
#include "hybridmt/phrase_table.hpp"
#include "hybridmt/run_config.hpp"
#include "hybridmt/scorer.hpp"
#include "hybridmt/search.hpp"

namespace hybridmt {

// Immutable models shared by all sentences of a run.
struct DecodeResources {
  std::unique_ptr<Scorer> scorer;
  PhraseTable table;
  std::optional<ArpaModel> lm;
};

// Loads the weight config into `config.weights` unless the pure-NMT preset is on.
void resolve_weights(RunConfig& config);

DecodeResources load_resources(const RunConfig& config);

// One tokenized sentence per line; blank lines are kept as empty sentences.
std::vector<std::vector<std::string>> read_token_lines(const std::filesystem::path& path);
std::vector<std::vector<std::string>> read_token_lines(std::istream& in);

// Decodes every sentence on `config.threads` workers; results are in input order.
// Empty sentences get an empty list.
std::vector<NBestList> decode_corpus(const DecodeResources& resources, const RunConfig& config,
                                     const std::vector<std::vector<std::string>>& sentences,
                                     const FeatureWeights& weights);

}  // namespace hybridmt
