#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rmscope/corpus.hpp"

namespace rmscope {

// Population moments: variance is m2, skewness is g1 = m3 / m2^1.5.
struct MomentsSummary {
  double mean = 0.0;
  double variance = 0.0;
  std::optional<double> skewness;
  std::size_t n = 0;
};

MomentsSummary moments(std::span<const double> xs, bool with_skewness = true);
MomentsSummary moments(const ScoreTable& table, bool with_skewness = true);

// Rank 1 is the highest value; tied values share the mean of the positions
// they cover.
std::vector<double> tied_ranks_descending(std::span<const double> xs);

struct RankVector {
  std::vector<Key> keys;  // table order (key ascending)
  std::vector<double> ranks;
};

RankVector rank_with_ties(const ScoreTable& table);

struct Extremes {
  std::vector<ScoreEntry> top;     // descending score, ties by ascending key
  std::vector<ScoreEntry> bottom;  // ascending score, ties by ascending key
};

Extremes extremes(const ScoreTable& table, std::size_t k);

}  // namespace rmscope
