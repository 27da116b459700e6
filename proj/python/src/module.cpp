#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <limits>
#include <sstream>
#include <variant>

#include "hybridmt/alignment.hpp"
#include "hybridmt/bleu.hpp"
#include "hybridmt/common.hpp"
#include "hybridmt/fixture.hpp"
#include "hybridmt/mert.hpp"
#include "hybridmt/ngram_lm.hpp"
#include "hybridmt/phrase_table.hpp"
#include "hybridmt/pipeline.hpp"
#include "hybridmt/run_config.hpp"
#include "hybridmt/search.hpp"
#include "hybridmt/tuning.hpp"

namespace py = pybind11;
using namespace hybridmt;

namespace {

using Sentence = std::variant<std::string, std::vector<std::string>>;

std::vector<std::string> tokens_of(const Sentence& s) {
  if (const auto* text = std::get_if<std::string>(&s)) return split_tokens(*text);
  return std::get<std::vector<std::string>>(s);
}

std::vector<std::vector<std::string>> corpus_of(const std::vector<Sentence>& sentences) {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(tokens_of(s));
  return out;
}

py::dict features_dict(const FeatureVector& f) {
  py::dict d;
  for (std::size_t m = 0; m < kNumFeatures; ++m) d[py::str(std::string(kFeatureNames[m]))] = f.values[m];
  return d;
}

py::dict weights_dict(const FeatureWeights& w) {
  py::dict d;
  for (std::size_t m = 0; m < kNumFeatures; ++m) {
    if (static_cast<Feature>(m) == Feature::kPhraseWordPenalty && !w.split_word_penalty) continue;
    d[py::str(std::string(kFeatureNames[m]))] = w.values[m];
  }
  return d;
}

FeatureWeights weights_from(const py::dict& d, FeatureWeights base) {
  for (const auto& [key, value] : d) {
    const auto name = key.cast<std::string>();
    const auto f = feature_from_name(name);
    if (!f) throw ConfigError("unknown feature '" + name + "'");
    base[*f] = value.cast<double>();
    if (*f == Feature::kPhraseWordPenalty) base.split_word_penalty = true;
  }
  return base;
}

double threshold_from(const py::handle& v) {
  if (py::isinstance<py::str>(v)) return parse_threshold(v.cast<std::string>());
  return v.cast<double>();
}

// Keyword names follow the CLI flags with '-' replaced by '_'.
RunConfig config_from(const py::kwargs& kw) {
  RunConfig c;
  std::optional<py::dict> weight_values;
  bool split_wp = false;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "model") c.model = value.cast<std::string>();
    else if (k == "src_vocab") c.source_vocab = value.cast<std::string>();
    else if (k == "tgt_vocab") c.target_vocab = value.cast<std::string>();
    else if (k == "phrase_table") c.phrase_table = value.cast<std::string>();
    else if (k == "lm") c.language_model = value.cast<std::string>();
    else if (k == "weights") {
      if (py::isinstance<py::dict>(value)) weight_values = value.cast<py::dict>();
      else c.weights_config = value.cast<std::string>();
    }
    else if (k == "scorer") c.scorer = value.cast<std::string>();
    else if (k == "synthetic_seed") c.synthetic_seed = value.cast<std::uint64_t>();
    else if (k == "synthetic_peaking") c.synthetic_peaking = value.cast<double>();
    else if (k == "beam_word") c.search.beam_word = value.cast<std::size_t>();
    else if (k == "beam_phrase") c.search.beam_phrase = value.cast<std::size_t>();
    else if (k == "tau_focus") c.search.tau_focus = threshold_from(value);
    else if (k == "tau_cov") c.search.tau_cov = threshold_from(value);
    else if (k == "max_step_factor") c.search.max_step_factor = value.cast<double>();
    else if (k == "length_normalization") c.search.length_normalization = value.cast<bool>();
    else if (k == "nbest_size") c.search.nbest_size = value.cast<std::size_t>();
    else if (k == "finished_factor") c.search.finished_factor = value.cast<std::size_t>();
    else if (k == "unbounded_finished") c.search.unbounded_finished = value.cast<bool>();
    else if (k == "max_phrase_candidates") c.search.max_phrase_candidates = value.cast<std::size_t>();
    else if (k == "min_src_len") c.match.min_source_length = value.cast<std::size_t>();
    else if (k == "max_src_len") c.match.max_source_length = value.cast<std::size_t>();
    else if (k == "k_max") c.match.max_candidates = value.cast<std::size_t>();
    else if (k == "pure_nmt") c.pure_nmt = value.cast<bool>();
    else if (k == "split_wp") split_wp = value.cast<bool>();
    else if (k == "threads") c.threads = value.cast<std::size_t>();
    else throw ConfigError("unknown option '" + k + "'");
  }
  if (split_wp) c.weights.split_word_penalty = true;
  if (c.pure_nmt) apply_pure_nmt_preset(c);
  resolve_weights(c);
  if (weight_values && !c.pure_nmt) c.weights = weights_from(*weight_values, c.weights);
  return c;
}

py::dict entry_dict(const NBestEntry& e, std::span<const std::string> source) {
  py::dict d;
  d["target"] = e.target;
  d["score"] = e.score;
  d["ranking_score"] = e.ranking_score;
  d["finished"] = e.finished;
  d["features"] = features_dict(e.features);
  py::list moves;
  for (const auto& m : e.derivation.moves) {
    py::dict md;
    md["kind"] = m.is_phrase() ? "phrase" : "word";
    md["target"] = m.target;
    if (m.is_phrase()) {
      md["source"] = m.source;
      md["source_start"] = m.source_start;
    }
    moves.append(md);
  }
  d["moves"] = moves;
  if (!e.attention.empty()) {
    const auto data = alignment_data(source, e);
    d["attention"] = data.attention;
    py::list boxes;
    for (const auto& b : data.phrases) {
      boxes.append(py::make_tuple(b.source_start, b.source_length, b.target_start, b.target_length));
    }
    d["phrase_boxes"] = boxes;
  }
  return d;
}

class PyDecoder {
 public:
  explicit PyDecoder(const py::kwargs& kw) : config_(config_from(kw)) {
    validate_run_config(config_);
    resources_ = load_resources(config_);
  }

  py::list decode(const std::vector<Sentence>& sentences, std::optional<std::size_t> nbest, bool attention) {
    RunConfig c = config_;
    if (nbest) c.search.nbest_size = *nbest;
    c.search.record_attention = attention;
    c.search.validate();
    const auto corpus = corpus_of(sentences);
    std::vector<NBestList> results;
    {
      py::gil_scoped_release release;
      results = decode_corpus(resources_, c, corpus, c.weights);
    }
    py::list out;
    for (std::size_t i = 0; i < results.size(); ++i) {
      py::list entries;
      for (const auto& e : results[i]) entries.append(entry_dict(e, corpus[i]));
      out.append(entries);
    }
    return out;
  }

  std::vector<std::string> translate(const Sentence& sentence) {
    const auto lists = decode(std::vector<Sentence>{sentence}, 1, false);
    const auto entries = lists[0].cast<py::list>();
    if (entries.empty()) return {};
    return entries[0].cast<py::dict>()["target"].cast<std::vector<std::string>>();
  }

  py::dict tune(const std::vector<Sentence>& sentences, const std::vector<std::vector<Sentence>>& references,
                std::size_t iterations, std::size_t nbest, std::uint64_t seed, bool apply) {
    const auto corpus = corpus_of(sentences);
    std::vector<std::vector<std::vector<std::string>>> refs;
    for (const auto& per_sentence : references) refs.push_back(corpus_of(per_sentence));
    if (refs.size() != corpus.size()) throw ConfigError("need one reference list per dev sentence");
    NBestPool pool(refs);
    RunConfig c = config_;
    c.search.nbest_size = nbest;
    TuningOptions options;
    options.iterations = iterations;
    options.mert.seed = seed;
    TuningResult result;
    {
      py::gil_scoped_release release;
      result = run_tuning([&](const FeatureWeights& w) { return decode_corpus(resources_, c, corpus, w); }, pool,
                          config_.weights, options);
    }
    if (apply) config_.weights = result.weights;
    py::dict d;
    d["weights"] = weights_dict(result.weights);
    d["aborted"] = result.aborted;
    d["error"] = result.error;
    py::list its;
    for (const auto& it : result.iterations) {
      py::dict id;
      id["iteration"] = it.iteration;
      id["dev_bleu"] = it.decode_bleu;
      id["pool_size"] = it.pool_size;
      id["pool_bleu_before"] = it.pool_bleu_before;
      id["pool_bleu_after"] = it.pool_bleu_after;
      its.append(id);
    }
    d["iterations"] = its;
    return d;
  }

  py::dict config() const {
    py::dict d;
    for (const auto& [k, v] : describe_run_config(config_)) d[py::str(k)] = v;
    return d;
  }

  py::dict weights() const { return weights_dict(config_.weights); }
  void set_weights(const py::dict& d) {
    FeatureWeights w = weights_from(d, config_.weights);
    w.validate();
    config_.weights = w;
  }

 private:
  RunConfig config_;
  DecodeResources resources_;
};

double py_bleu(const std::vector<Sentence>& hypotheses, const std::vector<std::vector<Sentence>>& references) {
  std::vector<std::vector<std::vector<std::string>>> refs;
  for (const auto& r : references) {
    auto c = corpus_of(r);
    if (c.size() != hypotheses.size()) throw ConfigError("reference set size differs from the hypotheses");
    refs.push_back(std::move(c));
  }
  return corpus_bleu(corpus_of(hypotheses), refs);
}

}  // namespace

PYBIND11_MODULE(_hybridmt, m) {
  m.doc() = "Hybrid NMT + phrase beam search decoder";

  // Most derived last: translators run in reverse registration order.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  py::class_<PyDecoder>(m, "Decoder")
      .def(py::init<const py::kwargs&>())
      .def("decode", &PyDecoder::decode, py::arg("sentences"), py::arg("nbest") = py::none(),
           py::arg("attention") = false)
      .def("translate", &PyDecoder::translate, py::arg("sentence"))
      .def("tune", &PyDecoder::tune, py::arg("sentences"), py::arg("references"), py::arg("iterations") = 5,
           py::arg("nbest") = 20, py::arg("seed") = 1, py::arg("apply") = true)
      .def_property("weights", &PyDecoder::weights, &PyDecoder::set_weights)
      .def_property_readonly("config", &PyDecoder::config);

  py::class_<ArpaModel>(m, "ArpaModel")
      .def_static("load", &ArpaModel::load, py::arg("path"))
      .def_static("from_text", [](const std::string& text) {
        std::istringstream in(text);
        return ArpaModel::parse(in, "<text>");
      })
      .def_property_readonly("order", &ArpaModel::order)
      .def_property_readonly("counts", &ArpaModel::counts)
      .def("score_sentence", [](const ArpaModel& lm, const Sentence& s, bool end) {
        auto words = tokens_of(s);
        if (end) words.push_back(std::string(kSentenceEnd));
        return lm.score_phrase(lm.begin_sentence(), words);
      }, py::arg("sentence"), py::arg("add_end") = true, "Natural-log probability given <s>")
      .def("score_word", [](const ArpaModel& lm, const std::vector<std::string>& history, const std::string& word) {
        LmHistory h;
        for (const auto& w : history) h.words.push_back(lm.index(w));
        return lm.score_word(h, word);
      }, py::arg("history"), py::arg("word"));

  py::class_<PhraseTable>(m, "PhraseTable")
      .def_static("load", &PhraseTable::load, py::arg("path"))
      .def("__len__", &PhraseTable::size)
      .def("lookup", [](const PhraseTable& t, const Sentence& source) {
        py::list out;
        const auto tokens = tokens_of(source);
        if (const auto* pairs = t.lookup(tokens)) {
          for (const auto& p : *pairs) {
            out.append(py::make_tuple(p.target, p.log_p_source_given_target, p.log_p_target_given_source));
          }
        }
        return out;
      }, py::arg("source"));

  m.def("bleu", &py_bleu, py::arg("hypotheses"), py::arg("references"),
        "Corpus BLEU; references is a list of reference sets, each aligned with the hypotheses");
  m.def("default_weights", [] { return weights_dict(FeatureWeights::hybrid_defaults()); });
  m.def("load_weights", [](const std::string& path) { return weights_dict(FeatureWeights::load(path)); },
        py::arg("path"));
  m.def("write_fixture", [](const std::string& dir, std::uint64_t seed, std::size_t sentences) {
    FixtureOptions o;
    o.seed = seed;
    o.sentences = sentences;
    write_fixture(dir, o);
  }, py::arg("directory"), py::arg("seed") = 1, py::arg("sentences") = 20);
  m.def("generate_arpa", &generate_normalized_arpa, py::arg("words"), py::arg("order"), py::arg("seed") = 1);
  m.def("fixture_files", [] {
    py::dict d;
    d["model"] = FixtureLayout::kModel;
    d["src_vocab"] = FixtureLayout::kSourceVocab;
    d["tgt_vocab"] = FixtureLayout::kTargetVocab;
    d["phrase_table"] = FixtureLayout::kPhraseTable;
    d["lm"] = FixtureLayout::kLanguageModel;
    d["weights"] = FixtureLayout::kWeights;
    d["source"] = FixtureLayout::kSource;
    d["reference"] = FixtureLayout::kReference;
    return d;
  });
}
