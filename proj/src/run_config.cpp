#include "hybridmt/run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "hybridmt/common.hpp"

namespace hybridmt {

namespace {

std::string number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is required");
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " not found: " + path.string());
  }
}

}  // namespace

void apply_pure_nmt_preset(RunConfig& config) {
  config.pure_nmt = true;
  config.search.beam_phrase = 0;
  config.search.length_normalization = true;
  config.weights = FeatureWeights::pure_nmt();
}

void validate_run_config(const RunConfig& config) {
  config.search.validate();
  config.match.validate();
  config.weights.validate();
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  if (config.scorer == "nmt") {
    require_file(config.model, "model");
    require_file(config.source_vocab, "source vocabulary");
    require_file(config.target_vocab, "target vocabulary");
  } else if (config.scorer == "synthetic") {
    require_file(config.target_vocab, "target vocabulary");
  } else {
    throw ConfigError("unknown scorer '" + config.scorer + "' (expected nmt or synthetic)");
  }
  if (config.search.beam_phrase > 0) require_file(config.phrase_table, "phrase table");
  if (!config.language_model.empty()) require_file(config.language_model, "language model");
  if (!config.weights_config.empty()) require_file(config.weights_config, "weight config");
}

std::vector<std::pair<std::string, std::string>> describe_run_config(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("scorer", c.scorer);
  out.emplace_back("model", c.model.string());
  out.emplace_back("source_vocab", c.source_vocab.string());
  out.emplace_back("target_vocab", c.target_vocab.string());
  out.emplace_back("phrase_table", c.phrase_table.string());
  out.emplace_back("lm", c.language_model.string());
  out.emplace_back("weights_config", c.weights_config.string());
  if (c.scorer == "synthetic") {
    out.emplace_back("synthetic_seed", std::to_string(c.synthetic_seed));
    out.emplace_back("synthetic_peaking", number(c.synthetic_peaking));
  }
  out.emplace_back("pure_nmt", c.pure_nmt ? "true" : "false");
  out.emplace_back("beam_word", std::to_string(c.search.beam_word));
  out.emplace_back("beam_phrase", std::to_string(c.search.beam_phrase));
  out.emplace_back("tau_focus", format_threshold(c.search.tau_focus));
  out.emplace_back("tau_cov", format_threshold(c.search.tau_cov));
  out.emplace_back("max_step_factor", number(c.search.max_step_factor));
  out.emplace_back("length_normalization", c.search.length_normalization ? "true" : "false");
  out.emplace_back("nbest_size", std::to_string(c.search.nbest_size));
  out.emplace_back("unbounded_finished", c.search.unbounded_finished ? "true" : "false");
  out.emplace_back("max_phrase_candidates", std::to_string(c.search.max_phrase_candidates));
  out.emplace_back("record_attention", c.search.record_attention ? "true" : "false");
  out.emplace_back("min_src_len", std::to_string(c.match.min_source_length));
  out.emplace_back("max_src_len", std::to_string(c.match.max_source_length));
  out.emplace_back("k_max", std::to_string(c.match.max_candidates));
  out.emplace_back("split_wp", c.weights.split_word_penalty ? "true" : "false");
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    out.emplace_back("weight." + std::string(kFeatureNames[f]), number(c.weights.values[f]));
  }
  out.emplace_back("threads", std::to_string(c.threads));
  return out;
}

std::string format_threshold(double value) {
  if (std::isinf(value) && value > 0) return "inf";
  return number(value);
}

double parse_threshold(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || std::isnan(v)) {
    throw ConfigError("malformed threshold '" + text + "'");
  }
  return v;
}

}  // namespace hybridmt
