#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hybridmt/loglinear.hpp"
#include "hybridmt/search.hpp"

namespace hybridmt {

// sentence_id ||| target tokens ||| name=value ... ||| total_score
void write_nbest(std::ostream& out, std::size_t sentence_id, const NBestList& nbest);

struct NBestLine {
  std::size_t sentence_id = 0;
  std::vector<std::string> target;
  FeatureVector features;
  double score = 0.0;
};

// Throws FormatError with the line number on malformed input.
std::vector<NBestLine> read_nbest(std::istream& in, const std::string& origin = "<stream>");

}  // namespace hybridmt
