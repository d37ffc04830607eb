#include "rmscope/elo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rmscope/error.hpp"
#include "rmscope/rankcorr.hpp"
#include "rmscope/stats.hpp"

namespace rmscope {

double elo_expected(double ra, double rb) {
  return 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
}

namespace {

// a + b == s with no rounding error (Knuth TwoSum).
bool sum_is_exact(double a, double b, double s) {
  if (a + b != s) return false;
  const double bb = s - a;
  return (a - (s - bb)) + (b - bb) == 0.0;
}

}  // namespace

std::pair<double, double> elo_update(double ra, double rb, Outcome outcome,
                                     const EloConfig& config) {
  const double expected_a = elo_expected(ra, rb);
  const double s_a = outcome == Outcome::kAWins ? 1.0 : 0.0;
  const double delta = config.k_factor * (s_a - expected_a);
  // Delta is snapped to a fixed dyadic grid (2^-41, below 1e-12). Ratings on
  // that grid (any integer base) then move by exactly opposite amounts and the
  // exact pair total is unchanged. Off-grid inputs keep the rounded total.
  const double grid = std::ldexp(1.0, -41);
  const double d = std::round(delta / grid) * grid;
  const double a_snap = ra + d;
  const double b_snap = rb - d;
  if (sum_is_exact(ra, d, a_snap) && sum_is_exact(rb, -d, b_snap)) return {a_snap, b_snap};
  const double total = ra + rb;
  const double a_new = ra + delta;
  const double b_new = rb - delta;
  if (a_new >= b_new) return {a_new, total - a_new};
  return {total - b_new, b_new};
}

RatingTable compute_ratings(std::span<const Comparison> log, const EloConfig& config) {
  if (log.empty()) throw Error(ErrorKind::kInsufficientData, "elo: empty comparison log");
  if (!(config.k_factor > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "elo: k_factor must be positive");
  }
  std::vector<const Comparison*> ordered;
  ordered.reserve(log.size());
  for (const auto& c : log) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->seq < b->seq; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->seq == ordered[i - 1]->seq) {
      throw Error(ErrorKind::kDuplicateKey,
                  "elo: duplicate seq " + std::to_string(ordered[i]->seq),
                  ordered[i]->seq);
    }
  }

  RatingTable table;
  for (const auto* c : ordered) {
    if (c->item_a == c->item_b) {
      throw Error(ErrorKind::kSelfPairing,
                  "elo: item '" + c->item_a + "' compared with itself at seq " +
                      std::to_string(c->seq),
                  c->seq);
    }
    auto& ra = table.ratings.try_emplace(c->item_a, config.base_rating).first->second;
    auto& rb = table.ratings.try_emplace(c->item_b, config.base_rating).first->second;
    std::tie(ra, rb) = elo_update(ra, rb, c->outcome, config);
    ++table.counts[c->item_a];
    ++table.counts[c->item_b];
  }
  return table;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::vector<Comparison> load_comparisons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<Comparison> log;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 4) {
      throw Error(ErrorKind::kParseError, where + ": expected 4 fields", line_no);
    }
    if (f[0] == "seq") continue;  // header
    Comparison c;
    try {
      c.seq = std::stoll(f[0]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParseError, where + ": bad seq", line_no);
    }
    c.item_a = f[1];
    c.item_b = f[2];
    if (f[3] == "a_wins") {
      c.outcome = Outcome::kAWins;
    } else if (f[3] == "b_wins") {
      c.outcome = Outcome::kBWins;
    } else {
      throw Error(ErrorKind::kParseError, where + ": bad outcome '" + f[3] + "'",
                  line_no);
    }
    log.push_back(std::move(c));
  }
  return log;
}

RatingTable load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  RatingTable table;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 3) {
      throw Error(ErrorKind::kParseError, where + ": expected 3 fields", line_no);
    }
    if (f[0] == "item_id") continue;
    try {
      const double r = std::stod(f[1]);
      const std::int64_t n = std::stoll(f[2]);
      if (!std::isfinite(r)) throw std::invalid_argument("rating");
      if (!table.ratings.emplace(f[0], r).second) {
        throw Error(ErrorKind::kDuplicateKey, where + ": duplicate item " + f[0],
                    line_no);
      }
      table.counts[f[0]] = n;
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParseError, where + ": bad rating row", line_no);
    }
  }
  return table;
}

ScoreTable ratings_as_table(const RatingTable& ratings, const std::string& label) {
  std::vector<ScoreEntry> entries;
  for (const auto& [item, r] : ratings.ratings) entries.push_back({item, item, r});
  return ScoreTable(label, "elo", std::move(entries));
}

namespace {

double subset_tau(const std::vector<std::size_t>& subset,
                  const std::vector<double>& human,
                  const std::vector<double>& model) {
  std::vector<double> h, m;
  for (auto i : subset) {
    h.push_back(human[i]);
    m.push_back(model[i]);
  }
  // Re-ranking inside the subset leaves tau-b unchanged (it is rank based),
  // but keeps the computation defined on subset ranks as documented.
  return kendall_tau_b(tied_ranks_descending(h), tied_ranks_descending(m));
}

}  // namespace

AlignmentReport align_ranks(const RatingTable& human,
                            std::span<const ScoreTable> model_tables,
                            const AlignConfig& config) {
  if (model_tables.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "align: no model tables");
  }
  std::vector<std::string> items;
  for (const auto& [item, r] : human.ratings) {
    bool everywhere = true;
    for (const auto& t : model_tables) {
      if (!t.find(Key{item})) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) items.push_back(item);
  }
  if (items.size() < config.min_overlap || items.size() < 2 * config.subset_size) {
    throw Error(ErrorKind::kInsufficientOverlap,
                "align: " + std::to_string(items.size()) + " common items, need " +
                    std::to_string(std::max(config.min_overlap, 2 * config.subset_size)),
                static_cast<std::int64_t>(items.size()));
  }
  const std::size_t n = items.size();

  std::vector<double> human_scores;
  for (const auto& it : items) human_scores.push_back(human.ratings.at(it));
  const auto human_ranks = tied_ranks_descending(human_scores);

  // Human top / bottom subsets by rank, ties by item id (items are sorted).
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return human_ranks[a] < human_ranks[b];
  });
  const std::vector<std::size_t> top(order.begin(),
                                     order.begin() + static_cast<std::ptrdiff_t>(config.subset_size));
  const std::vector<std::size_t> bottom(order.end() - static_cast<std::ptrdiff_t>(config.subset_size),
                                        order.end());

  AlignmentReport rep;
  rep.common_items = n;
  std::vector<double> rank_sum(n, 0.0);
  for (const auto& t : model_tables) {
    std::vector<double> scores;
    for (const auto& it : items) scores.push_back(t.find(Key{it})->score);
    const auto ranks = tied_ranks_descending(scores);
    for (std::size_t i = 0; i < n; ++i) rank_sum[i] += ranks[i];

    rep.model_ids.push_back(t.model_id());
    rep.per_model_tau.push_back(kendall_tau_b(human_ranks, ranks));
    rep.per_model_tau_top.push_back(subset_tau(top, human_ranks, ranks));
    rep.per_model_tau_bottom.push_back(subset_tau(bottom, human_ranks, ranks));
  }

  const double m = static_cast<double>(model_tables.size());
  auto mean_of = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / m;
  };
  rep.mean_tau = mean_of(rep.per_model_tau);
  rep.tau_top100 = mean_of(rep.per_model_tau_top);
  rep.tau_bottom100 = mean_of(rep.per_model_tau_bottom);
  if (model_tables.size() > 1) {
    double ss = 0.0;
    for (double x : rep.per_model_tau) ss += (x - rep.mean_tau) * (x - rep.mean_tau);
    rep.sd_tau = std::sqrt(ss / (m - 1.0));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double mean_rank = rank_sum[i] / m;
    rep.discrepancies.push_back(
        {items[i], human_ranks[i], mean_rank, mean_rank - human_ranks[i]});
  }
  std::stable_sort(rep.discrepancies.begin(), rep.discrepancies.end(),
                   [](const Discrepancy& a, const Discrepancy& b) {
                     return std::abs(a.delta) > std::abs(b.delta);
                   });
  return rep;
}

}  // namespace rmscope
