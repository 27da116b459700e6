#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hybridmt {

using TokenId = std::uint32_t;

inline constexpr std::string_view kSentenceBegin = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknownWord = "<unk>";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (model files, tables, LMs, n-best lists).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or option combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

bool is_reserved_token(std::string_view token);

// Splits on runs of ASCII whitespace.
std::vector<std::string> split_tokens(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace hybridmt
