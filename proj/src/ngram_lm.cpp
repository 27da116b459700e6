#include "hybridmt/ngram_lm.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>

#include "hybridmt/common.hpp"

namespace hybridmt {

namespace {

bool parse_double(const std::string& text, double& value) {
  errno = 0;
  char* end = nullptr;
  value = std::strtod(text.c_str(), &end);
  return end != text.c_str() && *end == '\0' && errno != ERANGE;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::size_t ArpaModel::KeyHash::operator()(const std::vector<LmWordId>& key) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (LmWordId w : key) {
    h ^= w;
    h *= 0x100000001b3ULL;
  }
  return h;
}

LmWordId ArpaModel::intern(const std::string& word) {
  auto [it, inserted] = word_index_.emplace(word, static_cast<LmWordId>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

ArpaModel ArpaModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open ARPA file " + path.string());
  return parse(in, path.string());
}

ArpaModel ArpaModel::parse(std::istream& in, const std::string& origin) {
  ArpaModel model;
  model.begin_id_ = model.intern(std::string(kSentenceBegin));
  model.end_id_ = model.intern(std::string(kSentenceEnd));
  model.unknown_id_ = model.intern(std::string(kUnknownWord));

  std::string raw;
  std::size_t line_no = 0;
  auto where = [&] { return origin + ":" + std::to_string(line_no); };
  auto next_line = [&](std::string& out) {
    while (std::getline(in, raw)) {
      ++line_no;
      out = trim(raw);
      if (!out.empty()) return true;
    }
    return false;
  };

  std::string line;
  // Anything before \data\ is ignored, as in common toolkits.
  while (true) {
    if (!next_line(line)) throw FormatError(origin + ": missing \\data\\ section");
    if (line == "\\data\\") break;
  }

  std::vector<std::size_t> declared;
  bool have_line = next_line(line);
  while (have_line && line.rfind("ngram ", 0) == 0) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where() + ": malformed ngram count line");
    const std::size_t order = std::strtoul(trim(line.substr(6, eq - 6)).c_str(), nullptr, 10);
    const std::size_t count = std::strtoul(trim(line.substr(eq + 1)).c_str(), nullptr, 10);
    if (order != declared.size() + 1) throw FormatError(where() + ": ngram orders must be listed 1..n");
    declared.push_back(count);
    have_line = next_line(line);
  }
  if (declared.empty()) throw FormatError(where() + ": no ngram counts in \\data\\ section");
  model.tables_.resize(declared.size());

  bool ended = false;
  while (have_line) {
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    if (line.size() < 9 || line.front() != '\\' || line.substr(line.size() - 7) != "-grams:") {
      throw FormatError(where() + ": expected an \\N-grams: section header, got '" + line + "'");
    }
    const std::size_t order = std::strtoul(line.c_str() + 1, nullptr, 10);
    if (order < 1 || order > declared.size()) {
      throw FormatError(where() + ": section for undeclared order " + std::to_string(order));
    }
    Table& table = model.tables_[order - 1];
    if (!table.empty()) throw FormatError(where() + ": duplicate section for order " + std::to_string(order));
    while ((have_line = next_line(line)) && line.front() != '\\') {
      const auto fields = split_tokens(line);
      if (fields.size() != order + 1 && fields.size() != order + 2) {
        throw FormatError(where() + ": expected " + std::to_string(order + 1) + " or " +
                          std::to_string(order + 2) + " fields");
      }
      NgramEntry entry;
      if (!parse_double(fields[0], entry.log10_prob)) {
        throw FormatError(where() + ": malformed probability '" + fields[0] + "'");
      }
      if (entry.log10_prob > 0.0) throw FormatError(where() + ": log10 probability > 0");
      if (fields.size() == order + 2 && !parse_double(fields.back(), entry.log10_backoff)) {
        throw FormatError(where() + ": malformed backoff '" + fields.back() + "'");
      }
      std::vector<LmWordId> key;
      key.reserve(order);
      for (std::size_t i = 1; i <= order; ++i) key.push_back(model.intern(fields[i]));
      if (!table.emplace(std::move(key), entry).second) {
        throw FormatError(where() + ": duplicate n-gram");
      }
    }
    if (table.size() != declared[order - 1]) {
      throw FormatError(origin + ": order " + std::to_string(order) + " declares " +
                        std::to_string(declared[order - 1]) + " n-grams but has " +
                        std::to_string(table.size()));
    }
  }
  if (!ended) throw FormatError(origin + ": missing \\end\\ marker");
  for (std::size_t m = 0; m < declared.size(); ++m) {
    if (model.tables_[m].size() != declared[m]) {
      throw FormatError(origin + ": order " + std::to_string(m + 1) + " declares " +
                        std::to_string(declared[m]) + " n-grams but has " +
                        std::to_string(model.tables_[m].size()));
    }
  }
  return model;
}

std::vector<std::size_t> ArpaModel::counts() const {
  std::vector<std::size_t> out;
  for (const auto& t : tables_) out.push_back(t.size());
  return out;
}

LmWordId ArpaModel::index(std::string_view word) const {
  auto it = word_index_.find(std::string(word));
  return it == word_index_.end() ? unknown_id_ : it->second;
}

LmHistory ArpaModel::begin_sentence() const {
  LmHistory h;
  if (order() > 1) h.words.push_back(begin_id_);
  return h;
}

LmHistory ArpaModel::extend(const LmHistory& history, LmWordId word) const {
  LmHistory out = history;
  out.words.push_back(word);
  const std::size_t keep = order() > 0 ? order() - 1 : 0;
  if (out.words.size() > keep) out.words.erase(out.words.begin(), out.words.end() - static_cast<std::ptrdiff_t>(keep));
  return out;
}

std::optional<NgramEntry> ArpaModel::entry(std::span<const LmWordId> ngram) const {
  if (ngram.empty() || ngram.size() > order()) return std::nullopt;
  const auto& table = tables_[ngram.size() - 1];
  auto it = table.find(std::vector<LmWordId>(ngram.begin(), ngram.end()));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

double ArpaModel::log10_score(std::span<const LmWordId> context, LmWordId word) const {
  bool known = tables_[0].contains({word});
  if (!known && tables_[0].contains({unknown_id_})) {
    word = unknown_id_;
    known = true;
  }
  // Iterative backoff: at most `order` lookups of the full n-gram.
  double backoff = 0.0;
  std::vector<LmWordId> key;
  while (true) {
    if (known) {
      key.assign(context.begin(), context.end());
      key.push_back(word);
      const auto& table = tables_[key.size() - 1];
      if (auto it = table.find(key); it != table.end()) return backoff + it->second.log10_prob;
    }
    if (context.empty()) break;
    if (auto ctx = entry(context)) backoff += ctx->log10_backoff;
    context = context.subspan(1);
  }
  return backoff + kMissingLog10Prob;
}

double ArpaModel::score_word(const LmHistory& history, LmWordId word) const {
  std::span<const LmWordId> context = history.words;
  const std::size_t keep = order() - 1;
  if (context.size() > keep) context = context.subspan(context.size() - keep);
  return log10_score(context, word) * std::numbers::ln10;
}

double ArpaModel::score_word(const LmHistory& history, std::string_view word) const {
  return score_word(history, index(word));
}

double ArpaModel::score_phrase(const LmHistory& history, std::span<const LmWordId> phrase,
                               LmHistory* final_history) const {
  LmHistory h = history;
  double total = 0.0;
  for (LmWordId w : phrase) {
    total += score_word(h, w);
    h = extend(h, w);
  }
  if (final_history != nullptr) *final_history = std::move(h);
  return total;
}

double ArpaModel::score_phrase(const LmHistory& history, std::span<const std::string> phrase) const {
  std::vector<LmWordId> ids;
  ids.reserve(phrase.size());
  for (const auto& w : phrase) ids.push_back(index(w));
  return score_phrase(history, ids);
}

}  // namespace hybridmt
