#include "hybridmt/mert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hybridmt/common.hpp"

namespace hybridmt {

namespace {

double dot(std::span<const double> a, const FeatureVector& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += a[i] * f.values[i];
  return s;
}

void check_size(std::span<const double> v, const char* what) {
  if (v.size() != kNumFeatures) {
    throw ConfigError(std::string(what) + " must have " + std::to_string(kNumFeatures) + " entries");
  }
}

struct Segment {
  double start;  // envelope takes this candidate from `start` onwards
  std::size_t candidate;
};

// Upper envelope of score(gamma) = intercept + gamma * slope over candidates.
std::vector<Segment> upper_envelope(std::span<const PoolCandidate> candidates,
                                    std::span<const double> weights, std::span<const double> direction) {
  struct Line {
    double slope, intercept;
    std::size_t index;
  };
  std::vector<Line> lines;
  lines.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    lines.push_back({dot(direction, candidates[c].features), dot(weights, candidates[c].features), c});
  }
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.slope != b.slope) return a.slope < b.slope;
    if (a.intercept != b.intercept) return a.intercept > b.intercept;
    return a.index < b.index;
  });

  std::vector<Line> hull;
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Line& line = lines[i];
    if (i > 0 && lines[i - 1].slope == line.slope) continue;  // dominated or identical
    double start = -std::numeric_limits<double>::infinity();
    while (!hull.empty()) {
      const Line& back = hull.back();
      const double x = (back.intercept - line.intercept) / (line.slope - back.slope);
      if (x <= segments.back().start) {
        hull.pop_back();
        segments.pop_back();
        start = -std::numeric_limits<double>::infinity();
        continue;
      }
      start = x;
      break;
    }
    hull.push_back(line);
    segments.push_back({start, line.index});
  }
  return segments;
}

}  // namespace

NBestPool::NBestPool(std::vector<std::vector<std::vector<std::string>>> references)
    : references_(std::move(references)), sentences_(references_.size()), seen_(references_.size()) {
  for (std::size_t i = 0; i < references_.size(); ++i) {
    if (references_[i].empty()) throw Error("sentence " + std::to_string(i) + " has no reference");
  }
}

std::size_t NBestPool::add(std::size_t sentence, std::vector<std::string> target,
                           const FeatureVector& features) {
  if (sentence >= sentences_.size()) throw Error("sentence index " + std::to_string(sentence) + " out of range");
  for (double v : features.values) {
    if (!std::isfinite(v)) throw FormatError("pool candidate with non-finite feature value");
  }
  if (!seen_[sentence].emplace(target, features.values).second) return 0;
  PoolCandidate c;
  c.stats = accumulate_bleu(target, references_[sentence]);
  c.target = std::move(target);
  c.features = features;
  sentences_[sentence].push_back(std::move(c));
  return 1;
}

std::size_t NBestPool::num_candidates() const {
  std::size_t n = 0;
  for (const auto& s : sentences_) n += s.size();
  return n;
}

std::vector<std::size_t> select_candidates(const NBestPool& pool, std::span<const double> weights) {
  check_size(weights, "weights");
  std::vector<std::size_t> chosen(pool.num_sentences(), static_cast<std::size_t>(-1));
  for (std::size_t s = 0; s < pool.num_sentences(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    const auto candidates = pool.candidates(s);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double score = dot(weights, candidates[c].features);
      if (chosen[s] == static_cast<std::size_t>(-1) || score > best) {
        best = score;
        chosen[s] = c;
      }
    }
  }
  return chosen;
}

double pool_bleu(const NBestPool& pool, std::span<const double> weights) {
  const auto chosen = select_candidates(pool, weights);
  BleuStats total;
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    if (chosen[s] != static_cast<std::size_t>(-1)) total += pool.candidates(s)[chosen[s]].stats;
  }
  return corpus_bleu(total);
}

LineSearchResult line_search(const NBestPool& pool, std::span<const double> weights,
                             std::span<const double> direction) {
  check_size(weights, "weights");
  check_size(direction, "direction");
  if (std::all_of(direction.begin(), direction.end(), [](double d) { return d == 0.0; })) {
    throw ConfigError("line search direction must be nonzero");
  }

  struct Event {
    double gamma;
    std::size_t sentence;
    std::size_t candidate;
  };
  BleuStats stats;
  std::vector<std::size_t> current(pool.num_sentences(), static_cast<std::size_t>(-1));
  std::vector<Event> events;
  for (std::size_t s = 0; s < pool.num_sentences(); ++s) {
    const auto candidates = pool.candidates(s);
    if (candidates.empty()) continue;
    const auto segments = upper_envelope(candidates, weights, direction);
    current[s] = segments.front().candidate;
    stats += candidates[current[s]].stats;
    for (std::size_t k = 1; k < segments.size(); ++k) events.push_back({segments[k].start, s, segments[k].candidate});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.gamma < b.gamma; });

  LineSearchResult result;
  result.bleu_at_zero = pool_bleu(pool, weights);
  result.bleu = result.bleu_at_zero;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  double best_bleu = -1.0;
  double best_gamma = 0.0, best_low = -kInf, best_high = kInf;
  auto consider = [&](double low, double high) {
    double gamma;
    if (std::isinf(low) && std::isinf(high)) {
      gamma = 0.0;
    } else if (std::isinf(low)) {
      gamma = high - 1.0;
    } else if (std::isinf(high)) {
      gamma = low + 1.0;
    } else {
      gamma = 0.5 * (low + high);
    }
    const double bleu = corpus_bleu(stats);
    if (bleu > best_bleu || (bleu == best_bleu && std::abs(gamma) < std::abs(best_gamma))) {
      best_bleu = bleu;
      best_gamma = gamma;
      best_low = low;
      best_high = high;
    }
  };

  double low = -kInf;
  std::size_t i = 0;
  while (i < events.size()) {
    const double gamma = events[i].gamma;
    consider(low, gamma);
    for (; i < events.size() && events[i].gamma == gamma; ++i) {
      const auto& e = events[i];
      stats -= pool.candidates(e.sentence)[current[e.sentence]].stats;
      current[e.sentence] = e.candidate;
      stats += pool.candidates(e.sentence)[current[e.sentence]].stats;
    }
    low = gamma;
  }
  consider(low, kInf);

  if (best_bleu > result.bleu_at_zero) {
    result.gamma = best_gamma;
    result.bleu = best_bleu;
    result.interval_low = best_low;
    result.interval_high = best_high;
  } else {
    result.gamma = 0.0;
    result.interval_low = 0.0;
    result.interval_high = 0.0;
  }
  return result;
}

MertResult optimize(const NBestPool& pool, const FeatureWeights& init, const MertOptions& options) {
  if (pool.num_candidates() == 0) throw Error("MERT needs a non-empty pool");
  init.validate();

  // Features that never vary stay fixed.
  std::array<bool, kNumFeatures> active{};
  for (std::size_t s = 0; s < pool.num_sentences(); ++s) {
    for (const auto& c : pool.candidates(s)) {
      for (std::size_t f = 0; f < kNumFeatures; ++f) active[f] = active[f] || c.features.values[f] != 0.0;
    }
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  auto ascend = [&](std::array<double, kNumFeatures> weights) {
    double bleu = pool_bleu(pool, weights);
    for (std::size_t round = 0; round < options.max_rounds; ++round) {
      std::vector<std::array<double, kNumFeatures>> directions;
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (!active[f]) continue;
        std::array<double, kNumFeatures> d{};
        d[f] = 1.0;
        directions.push_back(d);
      }
      for (std::size_t r = 0; r < options.random_directions; ++r) {
        std::array<double, kNumFeatures> d{};
        bool nonzero = false;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
          if (!active[f]) continue;
          d[f] = uniform(rng);
          nonzero = nonzero || d[f] != 0.0;
        }
        if (nonzero) directions.push_back(d);
      }
      bool improved = false;
      for (const auto& d : directions) {
        const LineSearchResult r = line_search(pool, weights, d);
        if (r.bleu > bleu + options.min_improvement) {
          auto moved = weights;
          for (std::size_t f = 0; f < kNumFeatures; ++f) moved[f] += r.gamma * d[f];
          // Re-evaluate the actual selection rather than trusting the interval value.
          const double moved_bleu = pool_bleu(pool, moved);
          if (moved_bleu > bleu) {
            weights = moved;
            bleu = moved_bleu;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    return std::pair{weights, bleu};
  };

  MertResult result;
  result.initial_bleu = pool_bleu(pool, init.values);
  result.weights = init;
  result.bleu = result.initial_bleu;
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t restart = 0; restart < restarts; ++restart) {
    std::array<double, kNumFeatures> start = init.values;
    if (restart > 0) {
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (active[f]) start[f] = uniform(rng);
      }
    }
    auto [weights, bleu] = ascend(start);
    if (bleu > result.bleu || (restart == 0 && bleu >= result.bleu)) {
      double scale = 0.0;
      for (double v : weights) scale = std::max(scale, std::abs(v));
      if (scale == 0.0 || !std::isfinite(scale)) continue;
      auto normalized = weights;
      for (double& v : normalized) v /= scale;
      if (pool_bleu(pool, normalized) == bleu) weights = normalized;
      result.weights.values = weights;
      result.bleu = bleu;
    }
  }
  return result;
}

}  // namespace hybridmt
