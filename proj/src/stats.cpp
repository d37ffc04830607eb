#include "rmscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rmscope/error.hpp"
#include "rmscope/numerics.hpp"

namespace rmscope {

MomentsSummary moments(std::span<const double> xs, bool with_skewness) {
  const std::size_t n = xs.size();
  if (n < 2) throw Error(ErrorKind::kInsufficientData, "moments: need n >= 2");
  if (with_skewness && n < 3) {
    throw Error(ErrorKind::kInsufficientData, "moments: skewness needs n >= 3");
  }
  const double nd = static_cast<double>(n);
  const double mean = stable_sum(xs) / nd;

  std::vector<double> d2(n), d3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = xs[i] - mean;
    d2[i] = d * d;
    d3[i] = d2[i] * d;
  }
  MomentsSummary out;
  out.n = n;
  out.mean = mean;
  out.variance = stable_sum(d2) / nd;
  if (with_skewness) {
    if (out.variance == 0.0) {
      throw Error(ErrorKind::kDegenerateDistribution,
                  "moments: zero variance, skewness undefined");
    }
    const double m3 = stable_sum(d3) / nd;
    out.skewness = m3 / std::pow(out.variance, 1.5);
  }
  return out;
}

MomentsSummary moments(const ScoreTable& table, bool with_skewness) {
  const auto s = table.scores();
  return moments(s, with_skewness);
}

std::vector<double> tied_ranks_descending(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] > xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    // positions i+1 .. j (1-based)
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t p = i; p < j; ++p) ranks[order[p]] = avg;
    i = j;
  }
  return ranks;
}

RankVector rank_with_ties(const ScoreTable& table) {
  if (table.empty()) throw Error(ErrorKind::kInsufficientData, "rank: empty table");
  RankVector out;
  const auto s = table.scores();
  out.ranks = tied_ranks_descending(s);
  out.keys.reserve(table.size());
  for (const auto& e : table.entries()) out.keys.push_back(e.key);
  return out;
}

Extremes extremes(const ScoreTable& table, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "extremes: k must be >= 1");
  if (k > table.size()) {
    throw Error(ErrorKind::kKTooLarge,
                "extremes: k=" + std::to_string(k) + " exceeds n=" +
                    std::to_string(table.size()));
  }
  // entries are key-ascending, so a stable sort on score alone breaks ties by key
  std::vector<ScoreEntry> by_desc = table.entries();
  std::vector<ScoreEntry> by_asc = table.entries();
  std::stable_sort(by_desc.begin(), by_desc.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  std::stable_sort(by_asc.begin(), by_asc.end(),
                   [](const auto& a, const auto& b) { return a.score < b.score; });
  by_desc.resize(k);
  by_asc.resize(k);
  return {std::move(by_desc), std::move(by_asc)};
}

}  // namespace rmscope
