#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hybridmt/loglinear.hpp"
#include "hybridmt/phrase_table.hpp"
#include "hybridmt/search.hpp"

namespace hybridmt {

struct RunConfig {
  std::filesystem::path model;
  std::filesystem::path source_vocab;
  std::filesystem::path target_vocab;
  std::filesystem::path phrase_table;
  std::filesystem::path language_model;
  std::filesystem::path weights_config;

  // "nmt" or "synthetic"
  std::string scorer = "nmt";
  std::uint64_t synthetic_seed = 1;
  double synthetic_peaking = 2.0;

  SearchParams search;
  MatchOptions match;
  FeatureWeights weights = FeatureWeights::hybrid_defaults();
  bool pure_nmt = false;
  std::size_t threads = 1;
};

// N_p = 0, neural feature only, length normalization on.
void apply_pure_nmt_preset(RunConfig& config);

// Range checks and presence of referenced files. Throws ConfigError.
void validate_run_config(const RunConfig& config);

// Fully resolved parameter set as key/value pairs, in a fixed order.
std::vector<std::pair<std::string, std::string>> describe_run_config(const RunConfig& config);

std::string format_threshold(double value);
// Accepts decimal numbers and "inf".
double parse_threshold(const std::string& text);

}  // namespace hybridmt
