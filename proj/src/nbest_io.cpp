#include "hybridmt/nbest_io.hpp"

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "hybridmt/common.hpp"

namespace hybridmt {

namespace {

std::vector<std::string> split_on(const std::string& line, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

bool parse_number(const std::string& text, double& value) {
  char* end = nullptr;
  value = std::strtod(text.c_str(), &end);
  return end != text.c_str() && *end == '\0';
}

}  // namespace

void write_nbest(std::ostream& out, std::size_t sentence_id, const NBestList& nbest) {
  std::ostringstream line;
  for (const auto& entry : nbest) {
    line.str({});
    line << sentence_id << " ||| " << join_tokens(entry.target) << " |||";
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      line << ' ' << kFeatureNames[f] << '=' << format_double(entry.features.values[f]);
    }
    line << " ||| " << format_double(entry.score) << '\n';
    out << line.str();
  }
}

std::vector<NBestLine> read_nbest(std::istream& in, const std::string& origin) {
  std::vector<NBestLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (split_tokens(line).empty()) continue;
    const auto fields = split_on(line, "|||");
    if (fields.size() != 4) throw FormatError(where + ": expected 4 fields separated by '|||'");
    NBestLine entry;
    const auto id_tokens = split_tokens(fields[0]);
    double id = 0.0;
    if (id_tokens.size() != 1 || !parse_number(id_tokens[0], id) || id < 0) {
      throw FormatError(where + ": malformed sentence id");
    }
    entry.sentence_id = static_cast<std::size_t>(id);
    entry.target = split_tokens(fields[1]);
    for (const auto& item : split_tokens(fields[2])) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw FormatError(where + ": feature '" + item + "' lacks '='");
      const auto feature = feature_from_name(item.substr(0, eq));
      if (!feature) throw FormatError(where + ": unknown feature '" + item.substr(0, eq) + "'");
      double value = 0.0;
      if (!parse_number(item.substr(eq + 1), value)) throw FormatError(where + ": malformed value in '" + item + "'");
      entry.features[*feature] = value;
    }
    const auto score_tokens = split_tokens(fields[3]);
    if (score_tokens.size() != 1 || !parse_number(score_tokens[0], entry.score)) {
      throw FormatError(where + ": malformed total score");
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace hybridmt
