#include "rmscope/rankcorr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "rmscope/error.hpp"
#include "rmscope/parallel.hpp"
#include "rmscope/stats.hpp"

namespace rmscope {

namespace {

// Counts pairs i<j with v[i] > v[j] while sorting v ascending.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf,
                         std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "kendall: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorKind::kInsufficientData, "kendall: n < 2");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t n0 = pairs(static_cast<std::int64_t>(n));
  std::int64_t n1 = 0;  // ties in x
  std::int64_t n3 = 0;  // joint ties
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && x[order[j]] == x[order[i]]) ++j;
      n1 += pairs(static_cast<std::int64_t>(j - i));
      std::size_t a = i;
      while (a < j) {
        std::size_t b = a + 1;
        while (b < j && y[order[b]] == y[order[a]]) ++b;
        n3 += pairs(static_cast<std::int64_t>(b - a));
        a = b;
      }
      i = j;
    }
  }

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t swaps = merge_count(ys, buf, 0, n);

  std::int64_t n2 = 0;  // ties in y; ys is now sorted
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && ys[j] == ys[i]) ++j;
      n2 += pairs(static_cast<std::int64_t>(j - i));
      i = j;
    }
  }

  if (n0 == n1 || n0 == n2) {
    throw Error(ErrorKind::kZeroVariance, "kendall: an input is entirely tied");
  }
  const std::int64_t num = n0 - n1 - n2 + n3 - 2 * swaps;
  const long double den = std::sqrt(static_cast<long double>(n0 - n1)) *
                          std::sqrt(static_cast<long double>(n0 - n2));
  const double tau = static_cast<double>(static_cast<long double>(num) / den);
  return std::clamp(tau, -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = tied_ranks_descending(x);
  const auto ry = tied_ranks_descending(y);
  return pearson(rx, ry);
}

CorrelationMetric parse_metric(const std::string& s) {
  if (s == "kendall") return CorrelationMetric::kKendall;
  if (s == "spearman") return CorrelationMetric::kSpearman;
  if (s == "pearson") return CorrelationMetric::kPearson;
  throw Error(ErrorKind::kInvalidArgument, "unknown metric '" + s + "'");
}

std::string to_string(CorrelationMetric metric) {
  switch (metric) {
    case CorrelationMetric::kKendall: return "kendall";
    case CorrelationMetric::kSpearman: return "spearman";
    case CorrelationMetric::kPearson: return "pearson";
  }
  return "kendall";
}

CorrelationMatrix correlation_matrix(const AlignedScores& scores,
                                     CorrelationMetric metric,
                                     std::size_t workers) {
  const std::size_t m = scores.model_ids.size();
  if (m < 2) throw Error(ErrorKind::kInvalidArgument, "correlation: need >= 2 models");
  if (scores.values.rows() < 2) {
    throw Error(ErrorKind::kInsufficientData, "correlation: fewer than 2 shared rows");
  }
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = scores.column(j);
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; })) {
      throw Error(ErrorKind::kZeroVariance,
                  "correlation: constant scores for model " + scores.model_ids[j],
                  static_cast<std::int64_t>(j));
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) tasks.emplace_back(a, b);
  std::vector<double> coef(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t t) {
    const auto [a, b] = tasks[t];
    const auto x = scores.column(a);
    const auto y = scores.column(b);
    switch (metric) {
      case CorrelationMetric::kKendall: coef[t] = kendall_tau_b(x, y); break;
      case CorrelationMetric::kSpearman: coef[t] = spearman(x, y); break;
      case CorrelationMetric::kPearson: coef[t] = pearson(x, y); break;
    }
  });

  CorrelationMatrix out;
  out.model_ids = scores.model_ids;
  const auto n = static_cast<Eigen::Index>(m);
  out.values = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto a = static_cast<Eigen::Index>(tasks[t].first);
    const auto b = static_cast<Eigen::Index>(tasks[t].second);
    out.values(a, b) = coef[t];
    out.values(b, a) = coef[t];
  }
  return out;
}

MdsResult classical_mds(const Eigen::MatrixXd& distances, int dims) {
  const Eigen::Index n = distances.rows();
  if (n < 3) throw Error(ErrorKind::kTooFewModels, "mds: need >= 3 points");
  if (dims < 1 || dims > n) throw Error(ErrorKind::kInvalidArgument, "mds: bad dims");

  const Eigen::MatrixXd d2 = distances.cwiseProduct(distances);
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) -
      Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::MatrixXd b = -0.5 * centering * d2 * centering;
  b = 0.5 * (b + b.transpose());

  const SymEigen eig = sym_eigen(b);
  MdsResult out;
  out.eigenvalues = eig.values;
  double neg = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += std::abs(eig.values(i));
    if (eig.values(i) < 0.0) neg += -eig.values(i);
  }
  out.negative_mass = total > 0.0 ? neg / total : 0.0;
  out.negative_mass_flag = out.negative_mass > 0.01;

  out.coords.resize(n, dims);
  for (int c = 0; c < dims; ++c) {
    const double lambda = std::max(0.0, eig.values(c));
    Eigen::VectorXd v = eig.vectors.col(c);
    // Fix the sign so the largest-magnitude component is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.coords.col(c) = v * std::sqrt(lambda);
  }
  return out;
}

MdsResult mds_2d(const CorrelationMatrix& corr) {
  if (corr.values.rows() < 3) {
    throw Error(ErrorKind::kTooFewModels, "mds: need >= 3 models");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(corr.values.rows(), corr.values.cols()) -
                      corr.values;
  d.diagonal().setZero();
  return classical_mds(d, 2);
}

std::string to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::kBaseModel: return "base_model";
    case FactorKind::kDeveloper: return "developer";
    case FactorKind::kParams: return "params";
    case FactorKind::kRank: return "rank";
  }
  return "unknown";
}

TheoreticalMatrix build_theoretical(std::span<const ModelMeta> metas,
                                    FactorKind kind) {
  if (metas.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "theoretical matrix needs >= 2 models");
  }
  const auto n = static_cast<Eigen::Index>(metas.size());
  TheoreticalMatrix out{kind, Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& a = metas[static_cast<std::size_t>(i)];
      const auto& b = metas[static_cast<std::size_t>(j)];
      double v = 0.0;
      switch (kind) {
        case FactorKind::kBaseModel: v = a.base_model == b.base_model ? 1.0 : 0.0; break;
        case FactorKind::kDeveloper: v = a.developer == b.developer ? 1.0 : 0.0; break;
        case FactorKind::kParams:
          v = 1.0 / (1.0 + std::abs(a.params_billions - b.params_billions));
          break;
        case FactorKind::kRank:
          v = 1.0 / (1.0 + std::abs(static_cast<double>(a.rewardbench_rank -
                                                        b.rewardbench_rank)));
          break;
      }
      out.values(i, j) = v;
    }
  }
  return out;
}

std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

namespace {

void check_dims(const CorrelationMatrix& empirical,
                std::span<const TheoreticalMatrix> theory) {
  for (const auto& t : theory) {
    if (t.values.rows() != empirical.values.rows() ||
        t.values.cols() != empirical.values.cols()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "rsa: theoretical matrix '" + to_string(t.kind) +
                      "' has mismatched dimension");
    }
  }
}

RsaFit fit_subset(const std::vector<double>& y,
                  std::span<const TheoreticalMatrix> theory,
                  const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd design(static_cast<Eigen::Index>(y.size()),
                         static_cast<Eigen::Index>(cols.size()));
  RsaFit fit;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto v = upper_triangle(theory[cols[c]].values);
    design.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    fit.factors.push_back(to_string(theory[cols[c]].kind));
  }
  fit.result = ols(design, y, true);
  return fit;
}

}  // namespace

std::vector<RsaFit> rsa_regress(const CorrelationMatrix& empirical,
                                std::span<const TheoreticalMatrix> theory,
                                RsaMode mode) {
  check_dims(empirical, theory);
  if (theory.empty()) throw Error(ErrorKind::kInvalidArgument, "rsa: no factors");
  const auto y = upper_triangle(empirical.values);
  std::vector<RsaFit> fits;
  if (mode == RsaMode::kSimpleEach) {
    for (std::size_t f = 0; f < theory.size(); ++f) {
      fits.push_back(fit_subset(y, theory, {f}));
    }
  } else {
    if (theory.size() < 2) {
      throw Error(ErrorKind::kInvalidArgument, "rsa: multiple mode needs >= 2 factors");
    }
    std::vector<std::size_t> all(theory.size());
    std::iota(all.begin(), all.end(), 0);
    fits.push_back(fit_subset(y, theory, all));
  }
  return fits;
}

StepwiseResult stepwise(const CorrelationMatrix& empirical,
                        std::span<const TheoreticalMatrix> theory,
                        double alpha_in, double alpha_out) {
  if (!(alpha_in > 0.0) || alpha_in > alpha_out || alpha_out >= 1.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "stepwise: require 0 < alpha_in <= alpha_out < 1");
  }
  check_dims(empirical, theory);
  const auto y = upper_triangle(empirical.values);

  std::vector<std::size_t> selected;
  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };

  // alpha_in <= alpha_out rules out add/remove cycles; the cap is a backstop.
  const std::size_t max_rounds = 4 * (theory.size() + 1) * (theory.size() + 1);
  for (std::size_t round = 0; round < max_rounds; ++round) {
    bool changed = false;

    std::optional<std::size_t> best;
    double best_p = 1.0;
    for (std::size_t f = 0; f < theory.size(); ++f) {
      if (std::find(selected.begin(), selected.end(), f) != selected.end()) continue;
      auto cols = selected;
      cols.push_back(f);
      double p = 1.0;
      try {
        p = fit_subset(y, theory, cols).result.p_values.back();
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kRankDeficient) continue;  // collinear with selection
        throw;
      }
      if (p < alpha_in && (!best || p < best_p)) {
        best = f;
        best_p = p;
      }
    }
    if (best) {
      selected.push_back(*best);
      changed = true;
    }

    if (!selected.empty()) {
      const auto fit = fit_subset(y, theory, selected);
      std::size_t worst = 0;
      double worst_p = -1.0;
      for (std::size_t c = 0; c < selected.size(); ++c) {
        const double p = fit.result.p_values[c + 1];
        if (p > worst_p) {
          worst_p = p;
          worst = c;
        }
      }
      if (worst_p > alpha_out) {
        selected.erase(selected.begin() + static_cast<std::ptrdiff_t>(worst));
        changed = true;
      }
    }
    if (!changed) break;
  }

  StepwiseResult out;
  out.selected = sorted(selected);
  out.empty_selection = out.selected.empty();
  if (!out.empty_selection) {
    auto fit = fit_subset(y, theory, out.selected);
    out.factors = fit.factors;
    out.final_fit = std::move(fit.result);
  }
  return out;
}

}  // namespace rmscope
