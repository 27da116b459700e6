#include "hybridmt/alignment.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace hybridmt {

namespace {

constexpr int kCell = 28;
constexpr int kLeftMargin = 110;
constexpr int kTopMargin = 10;
constexpr int kBottomMargin = 90;

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

AlignmentData alignment_data(std::span<const std::string> source, const NBestEntry& entry) {
  if (entry.attention.empty()) throw Error("attention was not recorded for this entry");
  AlignmentData data;
  data.source.assign(source.begin(), source.end());
  data.target = entry.derivation.target();
  data.attention = entry.attention;
  if (data.target.size() != data.attention.size()) {
    throw Error("attention rows do not match the derivation's target length");
  }
  std::size_t offset = 0;
  for (const auto& move : entry.derivation.moves) {
    const std::size_t emitted = move.target.size() - move.pending;
    if (move.is_phrase()) data.phrases.push_back({move.source_start, move.source.size(), offset, emitted});
    offset += emitted;
  }
  return data;
}

std::string alignment_tsv(const AlignmentData& data) {
  std::ostringstream out;
  out << std::setprecision(6) << std::fixed;
  for (const auto& s : data.source) out << '\t' << s;
  out << '\n';
  for (std::size_t i = 0; i < data.attention.size(); ++i) {
    out << data.target[i];
    for (double a : data.attention[i]) out << '\t' << a;
    out << '\n';
  }
  return out.str();
}

std::string alignment_svg(const AlignmentData& data) {
  const int cols = static_cast<int>(data.source.size());
  const int rows = static_cast<int>(data.target.size());
  const int width = kLeftMargin + cols * kCell + 10;
  const int height = kTopMargin + rows * kCell + kBottomMargin;
  std::ostringstream out;
  out << std::setprecision(4);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i < rows; ++i) {
    const int y = kTopMargin + i * kCell;
    out << "  <text x=\"" << kLeftMargin - 6 << "\" y=\"" << y + kCell / 2 + 4
        << "\" text-anchor=\"end\">" << escape_xml(data.target[static_cast<std::size_t>(i)]) << "</text>\n";
    for (int j = 0; j < cols; ++j) {
      const double a = data.attention[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const int shade = static_cast<int>(255.0 * (1.0 - std::clamp(a, 0.0, 1.0)) + 0.5);
      out << "  <rect class=\"cell\" x=\"" << kLeftMargin + j * kCell << "\" y=\"" << y << "\" width=\""
          << kCell << "\" height=\"" << kCell << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade
          << ")\"><title>" << a << "</title></rect>\n";
    }
  }
  const int label_y = kTopMargin + rows * kCell + 8;
  for (int j = 0; j < cols; ++j) {
    const int x = kLeftMargin + j * kCell + kCell / 2;
    out << "  <text x=\"" << x << "\" y=\"" << label_y << "\" transform=\"rotate(60 " << x << ' ' << label_y
        << ")\">" << escape_xml(data.source[static_cast<std::size_t>(j)]) << "</text>\n";
  }
  for (const auto& box : data.phrases) {
    out << "  <rect class=\"phrase\" x=\"" << kLeftMargin + static_cast<int>(box.source_start) * kCell
        << "\" y=\"" << kTopMargin + static_cast<int>(box.target_start) * kCell << "\" width=\""
        << static_cast<int>(box.source_length) * kCell << "\" height=\""
        << static_cast<int>(box.target_length) * kCell
        << "\" fill=\"none\" stroke=\"blue\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string alignment_to_json(const AlignmentData& data, std::size_t sentence_id) {
  nlohmann::json j;
  j["id"] = sentence_id;
  j["source"] = data.source;
  j["target"] = data.target;
  j["attention"] = data.attention;
  j["phrases"] = nlohmann::json::array();
  for (const auto& p : data.phrases) {
    j["phrases"].push_back({{"source_start", p.source_start},
                            {"source_length", p.source_length},
                            {"target_start", p.target_start},
                            {"target_length", p.target_length}});
  }
  return j.dump();
}

AlignmentData alignment_from_json(const std::string& line, std::size_t* sentence_id) {
  try {
    const auto j = nlohmann::json::parse(line);
    AlignmentData data;
    data.source = j.at("source").get<std::vector<std::string>>();
    data.target = j.at("target").get<std::vector<std::string>>();
    data.attention = j.at("attention").get<std::vector<std::vector<double>>>();
    for (const auto& p : j.at("phrases")) {
      data.phrases.push_back({p.at("source_start").get<std::size_t>(), p.at("source_length").get<std::size_t>(),
                              p.at("target_start").get<std::size_t>(), p.at("target_length").get<std::size_t>()});
    }
    if (sentence_id != nullptr) *sentence_id = j.at("id").get<std::size_t>();
    if (data.attention.size() != data.target.size()) throw FormatError("attention rows do not match target");
    for (const auto& row : data.attention) {
      if (row.size() != data.source.size()) throw FormatError("attention row width does not match source");
    }
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed alignment record: ") + e.what());
  }
}

}  // namespace hybridmt
