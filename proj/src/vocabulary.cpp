#include "hybridmt/vocabulary.hpp"

#include <fstream>

namespace hybridmt {

Vocabulary::Vocabulary()
    : Vocabulary(from_tokens({std::string(kSentenceBegin), std::string(kSentenceEnd),
                              std::string(kUnknownWord)})) {}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  std::vector<std::string> tokens = {std::string(kSentenceBegin), std::string(kSentenceEnd),
                                     std::string(kUnknownWord)};
  tokens.insert(tokens.end(), words.begin(), words.end());
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved || tokens[kBegin] != kSentenceBegin ||
      tokens[kEnd] != kSentenceEnd || tokens[kUnknown] != kUnknownWord) {
    throw FormatError("vocabulary must start with <s>, </s>, <unk>");
  }
  Vocabulary v{Uninitialized{}};
  v.tokens_ = std::move(tokens);
  v.index_.reserve(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    const std::string& t = v.tokens_[i];
    if (t.empty()) throw FormatError("empty token at index " + std::to_string(i));
    if (i >= kNumReserved && is_reserved_token(t)) {
      throw FormatError("reserved token '" + t + "' repeated at index " + std::to_string(i));
    }
    if (!v.index_.emplace(t, static_cast<TokenId>(i)).second) {
      throw FormatError("duplicate token '" + t + "' at index " + std::to_string(i));
    }
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return from_tokens(std::move(tokens));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

TokenId Vocabulary::index(std::string_view token) const {
  return find(token).value_or(kUnknown);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::map(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

}  // namespace hybridmt
