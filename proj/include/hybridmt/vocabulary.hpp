#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybridmt/common.hpp"

namespace hybridmt {

// Token list with the reserved tokens on fixed leading indices.
class Vocabulary {
 public:
  static constexpr TokenId kBegin = 0;
  static constexpr TokenId kEnd = 1;
  static constexpr TokenId kUnknown = 2;
  static constexpr std::size_t kNumReserved = 3;

  // Reserved tokens only.
  Vocabulary();

  // `words` must not contain reserved tokens or duplicates; they are placed
  // after the reserved block in the given order.
  static Vocabulary from_words(const std::vector<std::string>& words);

  // Full token list, reserved tokens first. Throws FormatError on violations.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  // One token per line, line number = index.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }

  // UNK for absent tokens.
  TokenId index(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::span<const std::string> tokens() const { return tokens_; }

  std::vector<TokenId> map(std::span<const std::string> tokens) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  struct Uninitialized {};
  explicit Vocabulary(Uninitialized) {}

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace hybridmt
