#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmscope/corpus.hpp"

namespace rmscope {

enum class Outcome { kAWins, kBWins };

struct Comparison {
  std::string item_a;
  std::string item_b;
  Outcome outcome = Outcome::kAWins;
  std::int64_t seq = 0;
};

struct EloConfig {
  double k_factor = 32.0;
  double base_rating = 1000.0;
};

// Expected score of a against b.
double elo_expected(double ra, double rb);

// One update. Delta is rounded to a multiple of 2^-41, so ratings grown from an
// integer base conserve the exact pair total; other inputs conserve ra + rb as
// rounded.
std::pair<double, double> elo_update(double ra, double rb, Outcome outcome,
                                     const EloConfig& config = {});

struct RatingTable {
  std::map<std::string, double> ratings;
  std::map<std::string, std::int64_t> counts;
};

// Sequential fold of elo_update in ascending seq order.
RatingTable compute_ratings(std::span<const Comparison> log,
                            const EloConfig& config = {});

// CSV seq,item_a,item_b,outcome with outcome in {a_wins, b_wins}.
std::vector<Comparison> load_comparisons(const std::filesystem::path& path);
// CSV item_id,rating,count.
RatingTable load_ratings(const std::filesystem::path& path);

// Ratings as an item-keyed table, for rank-based comparison with model dumps.
ScoreTable ratings_as_table(const RatingTable& ratings,
                            const std::string& label = "human");

struct Discrepancy {
  std::string item;
  double human_rank = 0.0;
  double mean_model_rank = 0.0;
  double delta = 0.0;  // mean_model_rank - human_rank; > 0 means humans rank it higher
};

struct AlignmentReport {
  std::vector<std::string> model_ids;
  std::vector<double> per_model_tau;
  std::vector<double> per_model_tau_top;
  std::vector<double> per_model_tau_bottom;
  double mean_tau = 0.0;
  double sd_tau = 0.0;  // sample standard deviation across models
  double tau_top100 = 0.0;
  double tau_bottom100 = 0.0;
  std::size_t common_items = 0;
  std::vector<Discrepancy> discrepancies;  // |delta| descending, ties by item
};

struct AlignConfig {
  std::size_t subset_size = 100;
  std::size_t min_overlap = 200;
};

AlignmentReport align_ranks(const RatingTable& human,
                            std::span<const ScoreTable> model_tables,
                            const AlignConfig& config = {});

}  // namespace rmscope
