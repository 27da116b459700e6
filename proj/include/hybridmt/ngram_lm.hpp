#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hybridmt {

using LmWordId = std::uint32_t;

// The last (order - 1) words seen, oldest first.
struct LmHistory {
  std::vector<LmWordId> words;
  bool operator==(const LmHistory&) const = default;
};

struct NgramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;  // 0 when the file gives none
};

// Backoff n-gram model read from ARPA text. Probabilities are kept in log10
// as stored and converted to natural log when queried.
class ArpaModel {
 public:
  // log10 probability used for words missing from the model when the model
  // has no <unk> unigram.
  static constexpr double kMissingLog10Prob = -100.0;

  static ArpaModel load(const std::filesystem::path& path);
  static ArpaModel parse(std::istream& in, const std::string& origin = "<stream>");

  std::size_t order() const { return tables_.size(); }
  // Number of n-grams per order, index 0 = unigrams.
  std::vector<std::size_t> counts() const;

  // Word index; unknown strings map to the <unk> index.
  LmWordId index(std::string_view word) const;
  const std::string& word(LmWordId id) const { return words_[id]; }
  std::size_t vocabulary_size() const { return words_.size(); }
  LmWordId begin_id() const { return begin_id_; }
  LmWordId end_id() const { return end_id_; }
  LmWordId unknown_id() const { return unknown_id_; }

  LmHistory begin_sentence() const;
  LmHistory extend(const LmHistory& history, LmWordId word) const;

  // Natural-log backoff probability of `word` after `history`.
  double score_word(const LmHistory& history, LmWordId word) const;
  double score_word(const LmHistory& history, std::string_view word) const;

  // Sum of score_word along the phrase with a sliding history. If
  // `final_history` is given it receives the history after the phrase.
  double score_phrase(const LmHistory& history, std::span<const LmWordId> phrase,
                      LmHistory* final_history = nullptr) const;
  double score_phrase(const LmHistory& history, std::span<const std::string> phrase) const;

  // Raw stored entry for an explicit n-gram.
  std::optional<NgramEntry> entry(std::span<const LmWordId> ngram) const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<LmWordId>& key) const noexcept;
  };
  using Table = std::unordered_map<std::vector<LmWordId>, NgramEntry, KeyHash>;

  LmWordId intern(const std::string& word);
  double log10_score(std::span<const LmWordId> context, LmWordId word) const;

  std::vector<Table> tables_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, LmWordId> word_index_;
  LmWordId begin_id_ = 0;
  LmWordId end_id_ = 0;
  LmWordId unknown_id_ = 0;
};

}  // namespace hybridmt
