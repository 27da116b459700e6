#include "hybridmt/phrase_table.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>

#include "hybridmt/common.hpp"

namespace hybridmt {

namespace {

constexpr std::string_view kFieldSeparator = "|||";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(kFieldSeparator, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + kFieldSeparator.size();
  }
  return fields;
}

double parse_probability(const std::string& text, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
    throw FormatError(where + ": malformed probability '" + text + "'");
  }
  if (!(value > 0.0) || value > 1.0 || !std::isfinite(value)) {
    throw FormatError(where + ": probability must be in (0, 1], got '" + text + "'");
  }
  return value;
}

}  // namespace

PhraseTable PhraseTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open phrase table " + path.string());
  return parse(in, path.string());
}

PhraseTable PhraseTable::parse(std::istream& in, const std::string& origin) {
  PhraseTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (split_tokens(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw FormatError(where + ": expected 3 fields separated by '|||', got " +
                        std::to_string(fields.size()));
    }
    PhrasePair pair;
    pair.source = split_tokens(fields[0]);
    pair.target = split_tokens(fields[1]);
    const auto scores = split_tokens(fields[2]);
    if (pair.source.empty()) throw FormatError(where + ": empty source phrase");
    if (pair.target.empty()) throw FormatError(where + ": empty target phrase");
    if (scores.size() != 2) {
      throw FormatError(where + ": expected 2 probabilities, got " + std::to_string(scores.size()));
    }
    pair.log_p_source_given_target = std::log(parse_probability(scores[0], where));
    pair.log_p_target_given_source = std::log(parse_probability(scores[1], where));
    if (std::any_of(pair.target.begin(), pair.target.end(),
                    [](const std::string& t) { return t == kSentenceBegin || t == kSentenceEnd; })) {
      ++table.dropped_reserved_;
      continue;
    }
    table.add(std::move(pair));
  }
  return table;
}

void PhraseTable::add(PhrasePair pair) {
  if (pair.source.empty() || pair.target.empty()) throw FormatError("phrase pair with empty side");
  for (const auto& t : pair.target) {
    if (t == kSentenceBegin || t == kSentenceEnd) {
      throw FormatError("target phrase contains reserved token " + t);
    }
  }
  for (double lp : {pair.log_p_source_given_target, pair.log_p_target_given_source}) {
    if (!std::isfinite(lp) || lp > 0.0) throw FormatError("phrase log-probability must be finite and <= 0");
  }
  max_source_length_ = std::max(max_source_length_, pair.source.size());
  auto key = pair.source;
  entries_[std::move(key)].push_back(std::move(pair));
  ++num_pairs_;
}

const std::vector<PhrasePair>* PhraseTable::lookup(std::span<const std::string> source) const {
  auto it = entries_.find(std::vector<std::string>(source.begin(), source.end()));
  return it == entries_.end() ? nullptr : &it->second;
}

const PhrasePair* PhraseTable::find(std::span<const std::string> source,
                                    std::span<const std::string> target) const {
  const auto* candidates = lookup(source);
  if (candidates == nullptr) return nullptr;
  for (const auto& pair : *candidates) {
    if (std::equal(pair.target.begin(), pair.target.end(), target.begin(), target.end())) return &pair;
  }
  return nullptr;
}

void MatchOptions::validate() const {
  if (min_source_length < 1) throw ConfigError("min_source_length must be >= 1");
  if (max_source_length < min_source_length) {
    throw ConfigError("max_source_length must be >= min_source_length");
  }
  if (max_candidates < 1) throw ConfigError("max_candidates must be >= 1");
}

std::span<const PhrasePair> TranslationOptions::at(std::size_t start, std::size_t length) const {
  auto it = spans_.find(Span{start, length});
  if (it == spans_.end()) return {};
  return it->second;
}

std::size_t TranslationOptions::num_candidates() const {
  std::size_t n = 0;
  for (const auto& [span, list] : spans_) n += list.size();
  return n;
}

void TranslationOptions::set(Span span, std::vector<PhrasePair> candidates) {
  if (candidates.empty()) {
    spans_.erase(span);
  } else {
    spans_[span] = std::move(candidates);
  }
}

void rank_candidates(std::vector<PhrasePair>& candidates, std::size_t max_candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const PhrasePair& a, const PhrasePair& b) {
    if (a.log_p_target_given_source != b.log_p_target_given_source) {
      return a.log_p_target_given_source > b.log_p_target_given_source;
    }
    return a.target < b.target;
  });
  if (candidates.size() > max_candidates) candidates.resize(max_candidates);
}

TranslationOptions match_source(std::span<const std::string> sentence, const PhraseTable& table,
                                const MatchOptions& options) {
  options.validate();
  TranslationOptions result;
  const std::size_t longest = std::min(options.max_source_length, table.max_source_length());
  for (std::size_t start = 0; start < sentence.size(); ++start) {
    for (std::size_t length = options.min_source_length;
         length <= longest && start + length <= sentence.size(); ++length) {
      const auto* candidates = table.lookup(sentence.subspan(start, length));
      if (candidates == nullptr) continue;
      auto ranked = *candidates;
      rank_candidates(ranked, options.max_candidates);
      result.set(Span{start, length}, std::move(ranked));
    }
  }
  return result;
}

}  // namespace hybridmt
