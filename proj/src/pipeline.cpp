#include "hybridmt/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "hybridmt/common.hpp"
#include "hybridmt/nmt_model.hpp"
#include "hybridmt/synthetic_scorer.hpp"
#include "hybridmt/vocabulary.hpp"

namespace hybridmt {

void resolve_weights(RunConfig& config) {
  if (config.pure_nmt || config.weights_config.empty()) return;
  const bool split = config.weights.split_word_penalty;
  config.weights = FeatureWeights::load(config.weights_config, config.weights);
  config.weights.split_word_penalty = config.weights.split_word_penalty || split;
}

DecodeResources load_resources(const RunConfig& config) {
  DecodeResources r;
  auto target_vocab = Vocabulary::load(config.target_vocab);
  if (config.scorer == "synthetic") {
    SyntheticConfig sc;
    sc.peaking = config.synthetic_peaking;
    r.scorer = std::make_unique<SyntheticScorer>(config.synthetic_seed, std::move(target_vocab), sc);
  } else {
    auto weights = std::make_shared<const nmt::ModelWeights>(nmt::load_weights(config.model));
    auto source_vocab = Vocabulary::load(config.source_vocab);
    r.scorer = std::make_unique<nmt::NmtScorer>(std::move(weights), std::move(source_vocab),
                                                std::move(target_vocab));
  }
  if (!config.phrase_table.empty() && config.search.beam_phrase > 0) {
    r.table = PhraseTable::load(config.phrase_table);
  }
  if (!config.language_model.empty()) r.lm = ArpaModel::load(config.language_model);
  return r;
}

std::vector<std::vector<std::string>> read_token_lines(std::istream& in) {
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(split_tokens(line));
  }
  return lines;
}

std::vector<std::vector<std::string>> read_token_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_token_lines(in);
}

std::vector<NBestList> decode_corpus(const DecodeResources& resources, const RunConfig& config,
                                     const std::vector<std::vector<std::string>>& sentences,
                                     const FeatureWeights& weights) {
  std::vector<NBestList> results(sentences.size());
  const ArpaModel* lm = resources.lm ? &*resources.lm : nullptr;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sentences.size()) return;
      if (sentences[i].empty()) continue;  // blank input line -> empty list
      try {
        const auto options = match_source(sentences[i], resources.table, config.match);
        results[i] = decode(sentences[i], *resources.scorer, options, lm, weights, config.search);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = sentences.size();
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, sentences.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace hybridmt
