#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rmscope/corpus.hpp"
#include "rmscope/numerics.hpp"

namespace rmscope {

// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Spearman's rho: Pearson correlation of average-tie ranks.
double spearman(std::span<const double> x, std::span<const double> y);

enum class CorrelationMetric { kKendall, kSpearman, kPearson };

CorrelationMetric parse_metric(const std::string& s);
std::string to_string(CorrelationMetric metric);

struct CorrelationMatrix {
  std::vector<std::string> model_ids;
  Eigen::MatrixXd values;  // symmetric, unit diagonal
};

CorrelationMatrix correlation_matrix(const AlignedScores& scores,
                                     CorrelationMetric metric,
                                     std::size_t workers = 1);

struct MdsResult {
  Eigen::MatrixXd coords;        // n x dims
  Eigen::VectorXd eigenvalues;   // all eigenvalues of the centred Gram matrix
  double negative_mass = 0.0;    // |sum of negative eigenvalues| / sum |eigenvalues|
  bool negative_mass_flag = false;  // negative_mass > 1%
};

// Classical (Torgerson) MDS of a distance matrix.
MdsResult classical_mds(const Eigen::MatrixXd& distances, int dims = 2);

// Classical MDS on d_ij = 1 - tau_ij.
MdsResult mds_2d(const CorrelationMatrix& corr);

enum class FactorKind { kBaseModel, kDeveloper, kParams, kRank };

std::string to_string(FactorKind kind);

struct TheoreticalMatrix {
  FactorKind kind;
  Eigen::MatrixXd values;
};

TheoreticalMatrix build_theoretical(std::span<const ModelMeta> metas,
                                    FactorKind kind);

// Strict upper triangle, row-major.
std::vector<double> upper_triangle(const Eigen::MatrixXd& m);

enum class RsaMode { kSimpleEach, kMultiple };

struct RsaFit {
  std::vector<std::string> factors;  // coefficient order after the intercept
  RegressionResult result;
};

std::vector<RsaFit> rsa_regress(const CorrelationMatrix& empirical,
                                std::span<const TheoreticalMatrix> theory,
                                RsaMode mode);

struct StepwiseResult {
  std::vector<std::size_t> selected;  // indices into theory, declaration order
  std::vector<std::string> factors;
  std::optional<RegressionResult> final_fit;
  bool empty_selection = false;
};

StepwiseResult stepwise(const CorrelationMatrix& empirical,
                        std::span<const TheoreticalMatrix> theory,
                        double alpha_in = 0.05, double alpha_out = 0.05);

}  // namespace rmscope
