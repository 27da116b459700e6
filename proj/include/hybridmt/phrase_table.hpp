#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hybridmt {

struct PhrasePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  double log_p_source_given_target = 0.0;  // ln p(f|e)
  double log_p_target_given_source = 0.0;  // ln p(e|f)

  bool operator==(const PhrasePair&) const = default;
};

// Source phrase -> candidates, in file order until matched.
class PhraseTable {
 public:
  // Text format, one entry per line:
  //   src tokens ||| tgt tokens ||| p(f|e) p(e|f)
  static PhraseTable load(const std::filesystem::path& path);
  static PhraseTable parse(std::istream& in, const std::string& origin = "<stream>");

  // Throws FormatError if the pair violates the PhrasePair invariants.
  void add(PhrasePair pair);

  const std::vector<PhrasePair>* lookup(std::span<const std::string> source) const;
  const PhrasePair* find(std::span<const std::string> source,
                         std::span<const std::string> target) const;

  std::size_t size() const { return num_pairs_; }
  bool empty() const { return num_pairs_ == 0; }
  std::size_t num_source_phrases() const { return entries_.size(); }
  // Entries skipped at load because their target side held a reserved token.
  std::size_t dropped_reserved() const { return dropped_reserved_; }
  std::size_t max_source_length() const { return max_source_length_; }

 private:
  std::map<std::vector<std::string>, std::vector<PhrasePair>> entries_;
  std::size_t num_pairs_ = 0;
  std::size_t dropped_reserved_ = 0;
  std::size_t max_source_length_ = 0;
};

// Zero-based source span.
struct Span {
  std::size_t start = 0;
  std::size_t length = 0;
  auto operator<=>(const Span&) const = default;
};

struct MatchOptions {
  std::size_t min_source_length = 1;
  std::size_t max_source_length = 7;
  std::size_t max_candidates = 100;

  void validate() const;
};

class TranslationOptions {
 public:
  // Empty list for spans without matches.
  std::span<const PhrasePair> at(std::size_t start, std::size_t length) const;
  const std::map<Span, std::vector<PhrasePair>>& spans() const { return spans_; }
  bool empty() const { return spans_.empty(); }
  std::size_t num_candidates() const;

  void set(Span span, std::vector<PhrasePair> candidates);

 private:
  std::map<Span, std::vector<PhrasePair>> spans_;
};

// Sorts candidates by ln p(e|f) descending, ties by target phrase, and keeps
// the first `max_candidates`.
void rank_candidates(std::vector<PhrasePair>& candidates, std::size_t max_candidates);

TranslationOptions match_source(std::span<const std::string> sentence, const PhraseTable& table,
                                const MatchOptions& options = {});

}  // namespace hybridmt
