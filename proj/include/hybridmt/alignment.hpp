#pragma once

#include <string>
#include <vector>

#include "hybridmt/search.hpp"

namespace hybridmt {

struct PhraseBox {
  std::size_t source_start = 0;
  std::size_t source_length = 0;
  std::size_t target_start = 0;
  std::size_t target_length = 0;
  bool operator==(const PhraseBox&) const = default;
};

// What the alignment export needs from a decoded sentence.
struct AlignmentData {
  std::vector<std::string> source;
  std::vector<std::string> target;  // one entry per attention row
  std::vector<std::vector<double>> attention;
  std::vector<PhraseBox> phrases;
};

// Throws Error if the entry carries no attention.
AlignmentData alignment_data(std::span<const std::string> source, const NBestEntry& entry);

std::string alignment_tsv(const AlignmentData& data);
std::string alignment_svg(const AlignmentData& data);

// JSON object per decoded sentence, as written by `decode --alignments`.
std::string alignment_to_json(const AlignmentData& data, std::size_t sentence_id);
AlignmentData alignment_from_json(const std::string& line, std::size_t* sentence_id = nullptr);

}  // namespace hybridmt
