#include <chrono>
#include <random>

#include "oracles.hpp"
#include "rmscope/corpus.hpp"
#include "rmscope/rankcorr.hpp"
#include "test_util.hpp"

using namespace rmscope;

namespace {

std::vector<ModelMeta> table_one() { return load_model_meta(RMSCOPE_FIXTURE_DIR "/models.json"); }

double dist2(const Eigen::MatrixXd& c, Eigen::Index i, Eigen::Index j) {
  return (c.row(i) - c.row(j)).norm();
}

AlignedScores aligned_from(const std::vector<std::vector<double>>& cols) {
  AlignedScores a;
  a.values.resize(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    a.model_ids.push_back("m" + std::to_string(j));
    for (std::size_t i = 0; i < cols[j].size(); ++i)
      a.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  }
  return a;
}

CorrelationMatrix as_corr(const Eigen::MatrixXd& m) {
  CorrelationMatrix c;
  for (Eigen::Index i = 0; i < m.rows(); ++i) c.model_ids.push_back("m" + std::to_string(i));
  c.values = m;
  return c;
}

}  // namespace

TEST(RankCorr, KendallSimpleCases) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> rev{4, 3, 2, 1};
  const std::vector<double> y{1, 3, 2, 4};
  EXPECT_EQ(kendall_tau_b(x, x), 1.0);
  EXPECT_EQ(kendall_tau_b(x, rev), -1.0);
  EXPECT_NEAR(kendall_tau_b(x, y), 2.0 / 3.0, 1e-15);
  EXPECT_RM_ERROR(kendall_tau_b(x, std::vector<double>(4, 1.0)), ErrorKind::kZeroVariance);
}

TEST(RankCorr, KendallMatchesBruteForceWithTies) {
  std::mt19937_64 rng(2024);
  for (int c = 0; c < 60; ++c) {
    const std::size_t n = 2 + rng() % 400;
    const int levels = 1 + static_cast<int>(rng() % 12);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % (levels + 1));
      y[i] = static_cast<double>(rng() % 7) + (c % 2 ? x[i] : 0.0);
    }
    const bool degenerate = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
                            std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (degenerate) continue;
    EXPECT_NEAR(kendall_tau_b(x, y), oracle::brute_tau_b(x, y), 1e-12) << "case " << c;
  }
}

TEST(RankCorr, KendallMonotoneInvariance) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(500), y(500), cubed(500);
  for (int i = 0; i < 500; ++i) {
    x[i] = n(rng);
    y[i] = x[i] + n(rng);
    cubed[i] = x[i] * x[i] * x[i];
  }
  EXPECT_EQ(kendall_tau_b(x, y), kendall_tau_b(cubed, y));
}

TEST(RankCorr, CorrelationMatrixProperties) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> a(10000), b(10000), c(10000);
  for (int i = 0; i < 10000; ++i) {
    a[i] = n(rng);
    b[i] = n(rng);
    c[i] = -a[i];
  }
  const auto cm = correlation_matrix(aligned_from({a, b, c, a}), CorrelationMetric::kKendall, 3);
  EXPECT_EQ(cm.values(0, 2), -1.0);
  EXPECT_EQ(cm.values(0, 3), 1.0);
  EXPECT_LT(std::abs(cm.values(0, 1)), 0.03);
  EXPECT_EQ(cm.values, cm.values.transpose());
  EXPECT_EQ(cm.values.diagonal(), Eigen::VectorXd::Ones(4));
  EXPECT_EQ(cm.values(1, 2), kendall_tau_b(b, c));

  const auto single = correlation_matrix(aligned_from({a, b, c, a}), CorrelationMetric::kKendall, 1);
  EXPECT_EQ(single.values, cm.values);

  const auto sp = correlation_matrix(aligned_from({a, c}), CorrelationMetric::kSpearman);
  EXPECT_NEAR(sp.values(0, 1), -1.0, 1e-12);
  try {
    correlation_matrix(aligned_from({a, std::vector<double>(10000, 1.0)}), CorrelationMetric::kKendall);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kZeroVariance);
    EXPECT_EQ(e.detail(), std::optional<std::int64_t>(1));
  }
}

TEST(RankCorr, MdsEquidistantTriple) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 0.5);
  c.diagonal().setOnes();
  const auto r = mds_2d(as_corr(c));
  const double d01 = dist2(r.coords, 0, 1), d02 = dist2(r.coords, 0, 2), d12 = dist2(r.coords, 1, 2);
  EXPECT_NEAR(d01, 0.5, 1e-8);
  EXPECT_NEAR(d01, d02, 1e-8);
  EXPECT_NEAR(d01, d12, 1e-8);
  EXPECT_RM_ERROR(mds_2d(as_corr(Eigen::MatrixXd::Identity(2, 2))), ErrorKind::kTooFewModels);
}

TEST(RankCorr, MdsRecoversPlanarConfiguration) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd pts(10, 2);
  for (int i = 0; i < 10; ++i) pts.row(i) << u(rng), u(rng);
  Eigen::MatrixXd d(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) d(i, j) = dist2(pts, i, j);
  const auto r = classical_mds(d, 2);
  double num = 0, den = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      const double e = dist2(r.coords, i, j) - d(i, j);
      num += e * e;
      den += d(i, j) * d(i, j);
    }
  EXPECT_LE(std::sqrt(num / den), 1e-6);
  EXPECT_FALSE(r.negative_mass_flag);
}

TEST(RankCorr, MdsDuplicateModelsCoincide) {
  Eigen::MatrixXd c(4, 4);
  c << 1, 1, 0.2, 0.1, 1, 1, 0.2, 0.1, 0.2, 0.2, 1, 0.4, 0.1, 0.1, 0.4, 1;
  const auto r = mds_2d(as_corr(c));
  EXPECT_NEAR(dist2(r.coords, 0, 1), 0.0, 1e-8);
}

TEST(RankCorr, MdsFlagsNonEuclideanInput) {
  Eigen::MatrixXd d(4, 4);
  d << 0, 1, 1, 3, 1, 0, 1, 1, 1, 1, 0, 1, 3, 1, 1, 0;  // violates the triangle inequality
  const auto r = classical_mds(d, 2);
  EXPECT_TRUE(r.negative_mass_flag);
}

TEST(RankCorr, TheoreticalMatricesFromPublishedMetadata) {
  const auto metas = table_one();
  const auto params = build_theoretical(metas, FactorKind::kParams);
  EXPECT_DOUBLE_EQ(params.values(0, 3), 0.05);  // 27B vs 8B
  const auto rank = build_theoretical(metas, FactorKind::kRank);
  EXPECT_DOUBLE_EQ(rank.values(0, 1), 0.5);  // ranks 2 and 3
  const auto dev = build_theoretical(metas, FactorKind::kDeveloper);
  EXPECT_EQ(dev.values(1, 2), 1.0);  // both Skywork
  EXPECT_EQ(dev.values(0, 1), 0.0);
  const auto base = build_theoretical(metas, FactorKind::kBaseModel);
  EXPECT_EQ(base.values.diagonal(), Eigen::VectorXd::Ones(10));
  EXPECT_EQ(upper_triangle(base.values).size(), 45u);
}

TEST(RankCorr, RsaNoiselessRecovery) {
  const auto metas = table_one();
  std::vector<TheoreticalMatrix> theory;
  for (auto k : {FactorKind::kBaseModel, FactorKind::kDeveloper, FactorKind::kParams, FactorKind::kRank})
    theory.push_back(build_theoretical(metas, k));
  const Eigen::MatrixXd emp = Eigen::MatrixXd::Constant(10, 10, 0.2) + 0.05 * theory[0].values +
                              0.7 * theory[3].values;
  const auto fits = rsa_regress(as_corr(emp), theory, RsaMode::kMultiple);
  ASSERT_EQ(fits.size(), 1u);
  const auto& b = fits[0].result.betas;
  EXPECT_NEAR(b[0], 0.2, 1e-8);
  EXPECT_NEAR(b[1], 0.05, 1e-8);
  EXPECT_NEAR(b[2], 0.0, 1e-8);
  EXPECT_NEAR(b[3], 0.0, 1e-8);
  EXPECT_NEAR(b[4], 0.7, 1e-8);
  EXPECT_EQ(fits[0].result.df_resid, 40);

  const std::vector<TheoreticalMatrix> one{theory[3]};
  const auto simple = rsa_regress(as_corr(theory[3].values), one, RsaMode::kSimpleEach);
  EXPECT_NEAR(simple[0].result.betas[1], 1.0, 1e-12);
  EXPECT_NEAR(simple[0].result.r_squared, 1.0, 1e-12);
  EXPECT_RM_ERROR(rsa_regress(as_corr(emp), one, RsaMode::kMultiple), ErrorKind::kInvalidArgument);
}

TEST(RankCorr, RsaCollinearFactorsAreRankDeficient) {
  const auto metas = table_one();
  const std::vector<TheoreticalMatrix> theory{build_theoretical(metas, FactorKind::kRank),
                                              build_theoretical(metas, FactorKind::kRank)};
  EXPECT_RM_ERROR(rsa_regress(as_corr(theory[0].values), theory, RsaMode::kMultiple),
                  ErrorKind::kRankDeficient);
}

TEST(RankCorr, StepwisePlantedAndDuplicated) {
  const auto metas = table_one();
  std::vector<TheoreticalMatrix> theory;
  for (auto k : {FactorKind::kBaseModel, FactorKind::kDeveloper, FactorKind::kParams, FactorKind::kRank})
    theory.push_back(build_theoretical(metas, k));
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0, 0.01);
  Eigen::MatrixXd emp = 0.1 * Eigen::MatrixXd::Ones(10, 10) + 0.3 * theory[0].values + 0.7 * theory[3].values;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) emp(j, i) = emp(i, j) += n(rng);
  const auto sel = stepwise(as_corr(emp), theory);
  EXPECT_FALSE(sel.empty_selection);
  EXPECT_TRUE(std::find(sel.selected.begin(), sel.selected.end(), 0u) != sel.selected.end());
  EXPECT_TRUE(std::find(sel.selected.begin(), sel.selected.end(), 3u) != sel.selected.end());

  // A duplicated factor can enter only once.
  std::vector<TheoreticalMatrix> dup{theory[3], theory[3], theory[1]};
  const auto d = stepwise(as_corr(emp), dup);
  EXPECT_EQ(std::count_if(d.selected.begin(), d.selected.end(), [](std::size_t s) { return s < 2; }), 1);

  EXPECT_RM_ERROR(stepwise(as_corr(emp), theory, 0.1, 0.05), ErrorKind::kInvalidArgument);
}

TEST(RankCorr, StepwiseEmptyOnNoiseAtStrictAlpha) {
  const auto metas = table_one();
  std::vector<TheoreticalMatrix> theory{build_theoretical(metas, FactorKind::kRank),
                                        build_theoretical(metas, FactorKind::kParams)};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd emp(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = i; j < 10; ++j) emp(i, j) = emp(j, i) = n(rng);
  const auto sel = stepwise(as_corr(emp), theory, 1e-6, 1e-6);
  EXPECT_TRUE(sel.empty_selection);
  EXPECT_FALSE(sel.final_fit.has_value());
}
