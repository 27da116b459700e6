#include "hybridmt/tuning.hpp"

#include <iomanip>
#include <ostream>

namespace hybridmt {

TuningResult run_tuning(const DevDecoder& decoder, NBestPool& pool, const FeatureWeights& init,
                        const TuningOptions& options, std::ostream* log) {
  TuningResult result;
  result.weights = init;
  for (std::size_t it = 1; it <= options.iterations; ++it) {
    std::vector<NBestList> lists;
    try {
      lists = decoder(result.weights);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.error = e.what();
      if (log) *log << "[tune] iteration " << it << ": decode failed (" << e.what() << "), keeping previous weights\n";
      break;
    }
    if (lists.size() != pool.num_sentences()) {
      result.aborted = true;
      result.error = "decoder returned " + std::to_string(lists.size()) + " lists for " +
                     std::to_string(pool.num_sentences()) + " dev sentences";
      break;
    }
    TuningIteration record;
    record.iteration = it;
    BleuStats one_best;
    for (std::size_t s = 0; s < lists.size(); ++s) {
      for (const auto& entry : lists[s]) pool.add(s, entry.target, entry.features);
      if (!lists[s].empty()) one_best += accumulate_bleu(lists[s].front().target, pool.references(s));
    }
    record.decode_bleu = corpus_bleu(one_best);
    record.pool_size = pool.num_candidates();

    MertOptions mert = options.mert;
    mert.seed = options.mert.seed + it;
    const MertResult optimized = optimize(pool, result.weights, mert);
    record.pool_bleu_before = optimized.initial_bleu;
    record.pool_bleu_after = optimized.bleu;
    result.weights = optimized.weights;
    result.iterations.push_back(record);
    if (log) {
      *log << std::fixed << std::setprecision(4) << "[tune] iteration " << it << ": dev BLEU "
           << 100.0 * record.decode_bleu << ", pool " << record.pool_size << " candidates, pool BLEU "
           << 100.0 * record.pool_bleu_before << " -> " << 100.0 * record.pool_bleu_after << '\n';
      log->unsetf(std::ios::floatfield);
    }
  }
  return result;
}

}  // namespace hybridmt
