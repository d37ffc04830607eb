#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace rmscope {

struct RegressionResult {
  std::vector<double> betas;  // intercept first when fitted with one
  std::vector<double> stderrs;
  std::vector<double> t_stats;
  std::vector<double> p_values;  // two-sided
  double r_squared = 0.0;
  double rss = 0.0;
  int df_resid = 0;
  bool has_intercept = false;

  // Half-width of the two-sided confidence interval for coefficient i.
  double ci_half_width(std::size_t i, double level = 0.95) const;
};

// Least squares via Householder QR. Throws RankDeficient with the index of the
// first design column (0-based, excluding the intercept) that is linearly
// dependent on the columns before it; the intercept itself reports -1.
RegressionResult ols(const Eigen::MatrixXd& design, std::span<const double> y,
                     bool include_intercept);

// Upper-tail probability P(T > t) of Student's t with df degrees of freedom.
double t_sf(double t, double df);
// Two-sided p-value 2 * P(T > |t|).
double t_two_sided_p(double t, double df);
// Quantile q with P(T <= q) = prob.
double t_quantile(double prob, double df);

struct SymEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column i pairs with values[i]
};

SymEigen sym_eigen(const Eigen::MatrixXd& m);

double pearson(std::span<const double> x, std::span<const double> y);

// Neumaier-compensated sum.
double stable_sum(std::span<const double> xs);

}  // namespace rmscope
