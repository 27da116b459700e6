// hybridmt command-line tool: decode, tune, bleu, align-export, fixture.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "hybridmt/alignment.hpp"
#include "hybridmt/bleu.hpp"
#include "hybridmt/common.hpp"
#include "hybridmt/fixture.hpp"
#include "hybridmt/mert.hpp"
#include "hybridmt/nbest_io.hpp"
#include "hybridmt/pipeline.hpp"
#include "hybridmt/run_config.hpp"
#include "hybridmt/tuning.hpp"

namespace {

using namespace hybridmt;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct DecodeFlags {
  RunConfig config;
  std::string tau_focus = "0.3";
  std::string tau_cov = "0.7";
  bool split_wp = false;
  bool echo_config = false;
  std::string input;
};

void add_model_options(CLI::App* cmd, DecodeFlags& f) {
  auto& c = f.config;
  cmd->add_option("--model", c.model, "Neural model weights (.bin)");
  cmd->add_option("--src-vocab", c.source_vocab, "Source vocabulary");
  cmd->add_option("--tgt-vocab", c.target_vocab, "Target vocabulary");
  cmd->add_option("--phrase-table", c.phrase_table, "Phrase table");
  cmd->add_option("--lm", c.language_model, "ARPA language model");
  cmd->add_option("--weights", c.weights_config, "Feature weight config");
  cmd->add_option("--scorer", c.scorer, "nmt or synthetic")->capture_default_str();
  cmd->add_option("--synthetic-seed", c.synthetic_seed)->capture_default_str();
  cmd->add_option("--synthetic-peaking", c.synthetic_peaking)->capture_default_str();

  auto& s = c.search;
  cmd->add_option("--beam-word", s.beam_word, "Word beam size N_w")->capture_default_str();
  cmd->add_option("--beam-phrase", s.beam_phrase, "Phrase beam size N_p")->capture_default_str();
  cmd->add_option("--tau-focus", f.tau_focus, "Focus attention threshold")->capture_default_str();
  cmd->add_option("--tau-cov", f.tau_cov, "Coverage threshold, 'inf' disables")->capture_default_str();
  cmd->add_option("--max-step-factor", s.max_step_factor, "Step limit as a multiple of source length")
      ->capture_default_str();
  cmd->add_flag("--length-normalization", s.length_normalization, "Rank finished hypotheses by Q/length");
  cmd->add_option("--nbest-size", s.nbest_size, "Entries per sentence in the n-best list")->capture_default_str();
  cmd->add_option("--finished-factor", s.finished_factor)->capture_default_str();
  cmd->add_flag("--unbounded-finished", s.unbounded_finished, "Never prune the finished set");
  cmd->add_option("--max-phrase-candidates", s.max_phrase_candidates, "Per-hypothesis phrase cap, 0 = none")
      ->capture_default_str();
  cmd->add_option("--min-src-len", c.match.min_source_length)->capture_default_str();
  cmd->add_option("--max-src-len", c.match.max_source_length)->capture_default_str();
  cmd->add_option("--k-max", c.match.max_candidates, "Target candidates per source phrase")->capture_default_str();
  cmd->add_flag("--pure-nmt", c.pure_nmt, "N_p=0, NMT feature only, length normalization on");
  cmd->add_flag("--split-wp", f.split_wp, "Separate word penalty for phrase words");
  cmd->add_option("--threads", c.threads)->capture_default_str();
  cmd->add_flag("--echo-config", f.echo_config, "Print the resolved configuration and exit");
}

// Applies presets and thresholds. Returns the config as it will be used.
RunConfig resolve(DecodeFlags& f) {
  RunConfig c = f.config;
  c.search.tau_focus = parse_threshold(f.tau_focus);
  c.search.tau_cov = parse_threshold(f.tau_cov);
  if (f.split_wp) c.weights.split_word_penalty = true;
  if (c.pure_nmt) apply_pure_nmt_preset(c);
  if (!f.echo_config) resolve_weights(c);
  return c;
}

void print_config(std::ostream& out, const RunConfig& c, const char* prefix) {
  for (const auto& [key, value] : describe_run_config(c)) out << prefix << key << '=' << value << '\n';
}

std::vector<std::vector<std::string>> read_input(const std::string& path) {
  if (path.empty() || path == "-") return read_token_lines(std::cin);
  return read_token_lines(path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

int cmd_decode(DecodeFlags& f, const std::string& output, const std::string& nbest_path,
               const std::string& alignments_path) {
  RunConfig c = resolve(f);
  if (f.echo_config) {
    print_config(std::cout, c, "");
    return 0;
  }
  if (!alignments_path.empty()) c.search.record_attention = true;
  validate_run_config(c);
  print_config(std::cerr, c, "[config] ");
  const auto resources = load_resources(c);
  const auto sentences = read_input(f.input);
  const auto results = decode_corpus(resources, c, sentences, c.weights);

  std::ofstream file;
  if (!output.empty() && output != "-") file = open_output(output);
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  for (const auto& list : results) out << (list.empty() ? std::string() : join_tokens(list.front().target)) << '\n';

  if (!nbest_path.empty()) {
    auto nb = open_output(nbest_path);
    for (std::size_t i = 0; i < results.size(); ++i) write_nbest(nb, i, results[i]);
  }
  if (!alignments_path.empty()) {
    auto al = open_output(alignments_path);
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].empty() || sentences[i].empty()) continue;
      al << alignment_to_json(alignment_data(sentences[i], results[i].front()), i) << '\n';
    }
  }
  return 0;
}

int cmd_tune(DecodeFlags& f, const std::vector<std::string>& ref_paths, const std::vector<std::string>& pool_paths,
             std::size_t iterations, const MertOptions& mert, const std::string& output) {
  RunConfig c = resolve(f);
  if (f.echo_config) {
    print_config(std::cout, c, "");
    return 0;
  }
  validate_run_config(c);
  if (ref_paths.empty()) throw ConfigError("at least one --ref is required");
  print_config(std::cerr, c, "[config] ");

  const auto sentences = read_input(f.input);
  std::vector<std::vector<std::vector<std::string>>> references(sentences.size());
  for (const auto& path : ref_paths) {
    const auto lines = read_token_lines(path);
    if (lines.size() != sentences.size()) {
      throw FormatError(path + ": " + std::to_string(lines.size()) + " lines, dev source has " +
                        std::to_string(sentences.size()));
    }
    for (std::size_t i = 0; i < lines.size(); ++i) references[i].push_back(lines[i]);
  }
  NBestPool pool(std::move(references));
  for (const auto& path : pool_paths) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    for (const auto& line : read_nbest(in, path)) {
      if (line.sentence_id >= pool.num_sentences()) throw FormatError(path + ": sentence id out of range");
      pool.add(line.sentence_id, line.target, line.features);
    }
  }

  const auto resources = load_resources(c);
  DevDecoder decoder = [&](const FeatureWeights& w) { return decode_corpus(resources, c, sentences, w); };
  TuningOptions options;
  options.iterations = iterations;
  options.mert = mert;
  const auto result = run_tuning(decoder, pool, c.weights, options, &std::cerr);

  std::ofstream file;
  if (!output.empty() && output != "-") file = open_output(output);
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  result.weights.write(out);
  if (result.aborted) {
    std::cerr << "error: tuning aborted: " << result.error << '\n';
    return kDataError;
  }
  return 0;
}

int cmd_bleu(const std::string& hyp_path, const std::vector<std::string>& ref_paths, bool merge_bpe,
             const std::string& marker) {
  auto hyps = read_token_lines(hyp_path);
  std::vector<std::vector<std::vector<std::string>>> refs;
  for (const auto& path : ref_paths) {
    refs.push_back(read_token_lines(path));
    if (refs.back().size() != hyps.size()) {
      throw FormatError(path + ": " + std::to_string(refs.back().size()) + " lines, hypotheses have " +
                        std::to_string(hyps.size()));
    }
  }
  if (merge_bpe) {
    for (auto& h : hyps) h = merge_subwords(h, marker);
    for (auto& set : refs) {
      for (auto& r : set) r = merge_subwords(r, marker);
    }
  }
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    std::vector<std::vector<std::string>> sentence_refs;
    for (const auto& set : refs) sentence_refs.push_back(set[i]);
    total += accumulate_bleu(hyps[i], sentence_refs);
  }
  std::cout << std::fixed << std::setprecision(2) << "BLEU = " << 100.0 * corpus_bleu(total);
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    const double p = total.totals[n] ? 100.0 * total.matches[n] / total.totals[n] : 0.0;
    std::cout << (n ? "/" : " ") << std::setprecision(1) << p;
  }
  std::cout << " (hyp_len=" << total.hypothesis_length << ", ref_len=" << total.reference_length << ")\n";
  return 0;
}

int cmd_align_export(const std::string& path, const std::string& out_dir, long sentence) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::filesystem::create_directories(out_dir);
  std::string line;
  std::size_t written = 0;
  while (std::getline(in, line)) {
    if (split_tokens(line).empty()) continue;
    std::size_t id = 0;
    const auto data = alignment_from_json(line, &id);
    if (sentence >= 0 && id != static_cast<std::size_t>(sentence)) continue;
    const auto base = std::filesystem::path(out_dir) / ("sentence" + std::to_string(id));
    open_output(base.string() + ".tsv") << alignment_tsv(data);
    open_output(base.string() + ".svg") << alignment_svg(data);
    ++written;
  }
  if (sentence >= 0 && written == 0) throw Error("sentence " + std::to_string(sentence) + " not found in " + path);
  std::cerr << "wrote " << written << " alignment(s) to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid NMT + phrase beam search decoder"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with option values ([decode] beam-word=32 ...)");

  DecodeFlags decode_flags;
  std::string output, nbest_path, alignments_path;
  auto* decode = app.add_subcommand("decode", "Translate tokenized source sentences");
  add_model_options(decode, decode_flags);
  decode->add_option("-i,--input", decode_flags.input, "Source file, default stdin");
  decode->add_option("-o,--output", output, "1-best output, default stdout");
  decode->add_option("--nbest", nbest_path, "Write the n-best list here");
  decode->add_option("--alignments", alignments_path, "Write 1-best attention/phrase alignments (JSON lines)");

  DecodeFlags tune_flags;
  tune_flags.config.search.nbest_size = 20;
  std::vector<std::string> ref_paths, pool_paths;
  std::size_t iterations = 5;
  MertOptions mert;
  std::string tune_output;
  auto* tune = app.add_subcommand("tune", "MERT over n-best lists of a development set");
  add_model_options(tune, tune_flags);
  tune->add_option("-i,--input", tune_flags.input, "Dev source file")->required();
  tune->add_option("--ref", ref_paths, "Reference file; repeat for multiple references")->required();
  tune->add_option("--pool", pool_paths, "Existing n-best files to seed the pool");
  tune->add_option("--iterations", iterations, "Outer decode/optimize iterations")->capture_default_str();
  tune->add_option("--restarts", mert.restarts)->capture_default_str();
  tune->add_option("--random-directions", mert.random_directions)->capture_default_str();
  tune->add_option("--seed", mert.seed)->capture_default_str();
  tune->add_option("-o,--output", tune_output, "Tuned weight config, default stdout");

  std::string hyp_path, marker = "@@";
  std::vector<std::string> bleu_refs;
  bool merge_bpe = false;
  auto* bleu = app.add_subcommand("bleu", "Corpus BLEU of a hypothesis file");
  bleu->add_option("--hyp", hyp_path)->required();
  bleu->add_option("--ref", bleu_refs, "Reference file; repeat for multiple references")->required();
  bleu->add_flag("--merge-bpe", merge_bpe, "Join subword units before scoring");
  bleu->add_option("--bpe-marker", marker)->capture_default_str();

  std::string align_path, align_dir = ".";
  long align_sentence = -1;
  auto* align = app.add_subcommand("align-export", "Write TSV and SVG alignment matrices");
  align->add_option("--alignments", align_path, "JSON lines written by decode --alignments")->required();
  align->add_option("--out-dir", align_dir)->capture_default_str();
  align->add_option("--sentence", align_sentence, "Only this sentence id");

  FixtureOptions fixture_options;
  std::string fixture_dir;
  auto* fixture = app.add_subcommand("fixture", "Generate a small self-consistent test world");
  fixture->add_option("--out", fixture_dir)->required();
  fixture->add_option("--seed", fixture_options.seed)->capture_default_str();
  fixture->add_option("--sentences", fixture_options.sentences)->capture_default_str();
  fixture->add_option("--source-words", fixture_options.source_words)->capture_default_str();
  fixture->add_option("--target-words", fixture_options.target_words)->capture_default_str();
  fixture->add_option("--min-length", fixture_options.min_length)->capture_default_str();
  fixture->add_option("--max-length", fixture_options.max_length)->capture_default_str();
  fixture->add_option("--embed", fixture_options.embed)->capture_default_str();
  fixture->add_option("--hidden", fixture_options.hidden)->capture_default_str();
  fixture->add_option("--lm-order", fixture_options.lm_order)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*decode) return cmd_decode(decode_flags, output, nbest_path, alignments_path);
    if (*tune) return cmd_tune(tune_flags, ref_paths, pool_paths, iterations, mert, tune_output);
    if (*bleu) return cmd_bleu(hyp_path, bleu_refs, merge_bpe, marker);
    if (*align) return cmd_align_export(align_path, align_dir, align_sentence);
    if (*fixture) {
      write_fixture(fixture_dir, fixture_options);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
