#include "rmscope/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <boost/math/distributions/students_t.hpp>

#include "rmscope/error.hpp"

namespace rmscope {

double stable_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double t_sf(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::kInvalidArgument, "t_sf: df must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t == std::numeric_limits<double>::infinity()) return 0.0;
  if (t == -std::numeric_limits<double>::infinity()) return 1.0;
  if (t == 0.0) return 0.5;
  const boost::math::students_t_distribution<double> dist(df);
  if (t > 0.0) return boost::math::cdf(boost::math::complement(dist, t));
  return 1.0 - boost::math::cdf(boost::math::complement(dist, -t));
}

double t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  return std::min(1.0, 2.0 * t_sf(std::abs(t), df));
}

double t_quantile(double prob, double df) {
  const boost::math::students_t_distribution<double> dist(df);
  return boost::math::quantile(dist, prob);
}

double RegressionResult::ci_half_width(std::size_t i, double level) const {
  return t_quantile(0.5 + level / 2.0, df_resid) * stderrs.at(i);
}

RegressionResult ols(const Eigen::MatrixXd& design, std::span<const double> y,
                     bool include_intercept) {
  const Eigen::Index n = design.rows();
  if (static_cast<std::size_t>(n) != y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "ols: design rows != len(y)");
  }
  const Eigen::Index offset = include_intercept ? 1 : 0;
  const Eigen::Index k = design.cols() + offset;
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "ols: no regressors");
  if (n <= k) {
    throw Error(ErrorKind::kInsufficientData,
                "ols: need n > k (n=" + std::to_string(n) +
                    ", k=" + std::to_string(k) + ")");
  }

  Eigen::MatrixXd x(n, k);
  if (include_intercept) x.col(0).setOnes();
  x.rightCols(design.cols()) = design;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  // Unpivoted QR: a vanishing R(j,j) means column j lies in the span of the
  // columns before it.
  for (Eigen::Index j = 0; j < k; ++j) {
    const double col_norm = x.col(j).norm();
    if (col_norm == 0.0 || std::abs(r(j, j)) <= 1e-10 * col_norm) {
      throw Error(ErrorKind::kRankDeficient,
                  "ols: design column " + std::to_string(j - offset) +
                      " is linearly dependent",
                  static_cast<std::int64_t>(j - offset));
    }
  }

  const Eigen::VectorXd qty = (qr.householderQ().transpose() * yv).head(k);
  const Eigen::VectorXd beta =
      r.triangularView<Eigen::Upper>().solve(qty);
  const Eigen::VectorXd resid = yv - x * beta;

  RegressionResult res;
  res.has_intercept = include_intercept;
  res.df_resid = static_cast<int>(n - k);
  res.rss = resid.squaredNorm();
  const double sigma2 = res.rss / res.df_resid;

  // diag((R^T R)^{-1}) = row norms of R^{-1}
  const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(k, k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const double b = beta(j);
    const double se = std::sqrt(sigma2 * r_inv.row(j).squaredNorm());
    double t = 0.0;
    if (se > 0.0) {
      t = b / se;
    } else if (b != 0.0) {
      t = std::copysign(std::numeric_limits<double>::infinity(), b);
    }
    res.betas.push_back(b);
    res.stderrs.push_back(se);
    res.t_stats.push_back(t);
    res.p_values.push_back(t_two_sided_p(t, res.df_resid));
  }

  double tss = 0.0;
  if (include_intercept) {
    const double mean = yv.mean();
    tss = (yv.array() - mean).square().sum();
  } else {
    tss = yv.squaredNorm();
  }
  res.r_squared = tss > 0.0 ? std::clamp(1.0 - res.rss / tss, 0.0, 1.0) : 1.0;
  return res;
}

SymEigen sym_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kNotSymmetric, "sym_eigen: matrix is not square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::kNotSymmetric, "sym_eigen: matrix is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidArgument, "sym_eigen: solver did not converge");
  }
  // Eigen returns ascending order.
  SymEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "pearson: length mismatch");
  }
  if (x.size() < 2) throw Error(ErrorKind::kInsufficientData, "pearson: n < 2");
  const double n = static_cast<double>(x.size());
  const double mx = stable_sum(x) / n;
  const double my = stable_sum(y) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::kZeroVariance, "pearson: constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace rmscope
