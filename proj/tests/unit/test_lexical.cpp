#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rmscope/lexical.hpp"
#include "rmscope/numerics.hpp"
#include "test_util.hpp"

using namespace rmscope;

namespace {

// Vocabulary of " word" tokens plus one control and one non-word token.
struct MiniCorpus {
  Vocabulary vocab;
  ScoreTable table;
};

MiniCorpus mini(const std::vector<std::pair<std::string, double>>& words) {
  std::vector<TokenEntry> entries{{0, "<s>", true}, {1, "1234", false}};
  std::vector<ScoreEntry> scores{{TokenId{0}, "<s>", 0.0}, {TokenId{1}, "1234", 0.0}};
  TokenId id = 2;
  for (const auto& [w, s] : words) {
    entries.push_back({id, " " + w, false});
    scores.push_back({id, " " + w, s});
    ++id;
  }
  return {Vocabulary("mini", entries), ScoreTable("m", "p", scores)};
}

SentimentLexicon lexicon(std::initializer_list<std::pair<const std::string, int>> e) {
  SentimentLexicon lex;
  lex.entries = e;
  return lex;
}

}  // namespace

TEST(Lexical, NormalizeToken) {
  EXPECT_EQ(normalize_token(" Love"), "love");
  EXPECT_EQ(normalize_token("\tDon't"), "don't");
  EXPECT_EQ(normalize_token("good"), "good");
  EXPECT_FALSE(normalize_token("'tis"));
  EXPECT_FALSE(normalize_token("it''s"));
  EXPECT_FALSE(normalize_token("abc'"));
  EXPECT_FALSE(normalize_token("ab1"));
  EXPECT_FALSE(normalize_token(" "));
  EXPECT_FALSE(normalize_token(""));
  EXPECT_FALSE(normalize_token("caf\xc3\xa9"));
  EXPECT_FALSE(normalize_token("good-bye"));
}

TEST(Lexical, LoadAfinnSkipsPhrases) {
  const auto lex = load_afinn(RMSCOPE_FIXTURE_DIR "/lexicon_afinn.txt");
  EXPECT_EQ(lex.source, LexiconSource::kAfinn);
  EXPECT_FALSE(lex.valence("not good"));
  EXPECT_TRUE(lex.valence("love"));
  for (const auto& [w, v] : lex.entries) {
    EXPECT_GE(v, -5);
    EXPECT_LE(v, 5);
    EXPECT_NE(v, 0) << w;
  }
  const auto dir = oracle::fresh_dir("afinn");
  write_file(dir / "bad.txt", "good\t3\nbad\tx\n");
  try {
    load_afinn(dir / "bad.txt");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParseError);
    EXPECT_EQ(e.detail(), std::optional<std::int64_t>(2));
  }
  write_file(dir / "range.txt", "good\t9\n");
  EXPECT_RM_ERROR(load_afinn(dir / "range.txt"), ErrorKind::kParseError);
  write_file(dir / "dup.txt", "good\t3\ngood\t2\n");
  EXPECT_RM_ERROR(load_afinn(dir / "dup.txt"), ErrorKind::kDuplicateKey);
}

TEST(Lexical, LoadBing) {
  const auto lex = load_bing(RMSCOPE_FIXTURE_DIR "/bing_positive.txt",
                             RMSCOPE_FIXTURE_DIR "/bing_negative.txt");
  EXPECT_EQ(lex.source, LexiconSource::kBing);
  ASSERT_FALSE(lex.entries.empty());
  for (const auto& [w, v] : lex.entries) {
    EXPECT_TRUE(v == 1 || v == -1) << w;
    EXPECT_NE(w.front(), ';');
  }
}

TEST(Lexical, FrequencyCaseVariantsSum) {
  const auto dir = oracle::fresh_dir("freq");
  write_file(dir / "f.csv", "word,freq_per_million\nlove,30\nLove,20\nhate,5\n");
  const auto f = load_frequency(dir / "f.csv");
  EXPECT_DOUBLE_EQ(f.per_million.at("love"), 50.0);
  EXPECT_DOUBLE_EQ(*f.log_frequency("love"), std::log(50.0));
  EXPECT_DOUBLE_EQ(*f.log_frequency("hate"), std::log(5.0));
  EXPECT_FALSE(f.log_frequency("missing"));
  EXPECT_RM_ERROR(make_frequency_table({{"x", 0.0}}), ErrorKind::kInvalidArgument);
}

TEST(Lexical, JoinKeepsOnlyLexiconWords) {
  const auto c = mini({{"Love", 2.0}, {"hate", -1.0}, {"table", 0.3}});
  const auto lex = lexicon({{"love", 3}, {"hate", -3}});
  const auto freq = make_frequency_table({{"love", 10.0}});
  const auto rows = join_lexical(c.table, c.vocab, lex, &freq);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].word, "love");
  EXPECT_EQ(rows[0].valence, 3);
  EXPECT_EQ(rows[0].score, 2.0);
  EXPECT_DOUBLE_EQ(*rows[0].log_freq, std::log(10.0));
  EXPECT_FALSE(rows[1].log_freq);
  EXPECT_RM_ERROR(join_lexical(c.table, c.vocab, lexicon({{"zzz", 1}})), ErrorKind::kEmptyJoin);
}

TEST(Lexical, PlantedSlopesAreRecoveredExactly) {
  std::vector<LexicalJoinRow> rows;
  for (int v : {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5}) {
    const double s = v > 0 ? 0.5 + 2.0 * v : 0.5 + 0.25 * v;
    rows.push_back({TokenId{v + 10}, "w", s, v, std::nullopt});
  }
  const auto sl = sentiment_slopes(rows);
  EXPECT_NEAR(sl.beta_pos(), 2.0, 1e-12);
  EXPECT_NEAR(sl.beta_neg(), 0.25, 1e-12);
  EXPECT_NEAR(sl.positive.betas[0], 0.5, 1e-12);
  EXPECT_EQ(sl.positive.df_resid, 3);
  EXPECT_GT(sl.beta_all(), 0.25);
}

TEST(Lexical, SlopeErrorsOnDegenerateClasses) {
  std::vector<LexicalJoinRow> rows;
  for (int v : {1, 2, 3, -2, -2, -2}) rows.push_back({TokenId{v}, "w", 1.0 * v, v, std::nullopt});
  EXPECT_RM_ERROR(sentiment_slopes(rows), ErrorKind::kInsufficientData);
  rows.resize(2);
  EXPECT_RM_ERROR(sentiment_slope_all(rows), ErrorKind::kInsufficientData);
}

TEST(Lexical, PairedTestMatchesHandComputation) {
  const std::vector<std::pair<double, double>> pn{{1.0, 0.5}, {0.8, 0.6}, {1.2, 0.4}, {0.9, 0.9}};
  const std::vector<double> d{0.5, 0.2, 0.8, 0.0};
  long double mean = 0;
  for (double v : d) mean += v;
  mean /= 4;
  long double ss = 0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const long double t = mean / (std::sqrt(ss / 3) / 2);
  const auto r = paired_slope_test(pn);
  EXPECT_EQ(r.df, 3);
  EXPECT_NEAR(r.mean_diff, 0.375, 1e-15);
  EXPECT_NEAR(r.t, static_cast<double>(t), 1e-12);
  EXPECT_NEAR(r.p, 2 * t_sf(static_cast<double>(t), 3), 1e-14);
  const std::vector<std::pair<double, double>> one{{1.0, 0.5}};
  EXPECT_RM_ERROR(paired_slope_test(one), ErrorKind::kInsufficientData);
  const std::vector<std::pair<double, double>> same{{1.0, 1.0}, {2.0, 2.0}};
  EXPECT_RM_ERROR(paired_slope_test(same), ErrorKind::kZeroVariance);
}

TEST(Lexical, FrequencyConfoundDisappearsWhenControlled) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 0.1);
  std::vector<LexicalJoinRow> rows;
  for (int i = 0; i < 400; ++i) {
    const int v = (i % 10) - 5 + (i % 10 >= 5 ? 1 : 0);
    const double lf = 0.6 * v + noise(rng) * 5;
    rows.push_back({TokenId{i}, "w", 0.3 * v + noise(rng), v, lf});
  }
  rows.push_back({TokenId{999}, "nofreq", 100.0, 1, std::nullopt});
  const auto unc = frequency_regression(rows, false);
  const auto ctl = frequency_regression(rows, true);
  EXPECT_EQ(unc.df_resid, 398);
  EXPECT_GT(unc.betas[1], 0.0);
  EXPECT_LT(unc.p_values[1], 1e-6);
  EXPECT_LT(std::abs(ctl.betas[1]), 2 * ctl.stderrs[1]);
  EXPECT_NEAR(ctl.betas[2], 0.3, 0.05);
}

TEST(Lexical, FramingAxes) {
  const ScoreTable best("m", "best", {{TokenId{1}, " a", 2.0}, {TokenId{2}, " b", -1.0}});
  const ScoreTable worst("m", "worst", {{TokenId{1}, " a", 0.5}, {TokenId{2}, " b", 3.0}});
  const auto ax = framing_axes(best, worst);
  EXPECT_EQ(ax.sum.entries()[0].score, 2.5);
  EXPECT_EQ(ax.diff.entries()[0].score, 1.5);
  EXPECT_EQ(ax.sum.entries()[1].score, 2.0);
  EXPECT_EQ(ax.diff.entries()[1].score, -4.0);
  const ScoreTable other("n", "worst", {{TokenId{1}, " a", 0.5}, {TokenId{2}, " b", 3.0}});
  EXPECT_RM_ERROR(framing_axes(best, other), ErrorKind::kInconsistentHeader);
  const ScoreTable partial("m", "worst", {{TokenId{1}, " a", 0.5}, {TokenId{3}, " c", 3.0}});
  try {
    framing_axes(best, partial);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kKeyMismatch);
    EXPECT_EQ(e.detail(), std::optional<std::int64_t>(2));
  }
}
