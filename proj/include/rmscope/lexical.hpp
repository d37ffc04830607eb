#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rmscope/corpus.hpp"
#include "rmscope/numerics.hpp"

namespace rmscope {

enum class LexiconSource { kAfinn, kBing };

struct SentimentLexicon {
  LexiconSource source = LexiconSource::kAfinn;
  std::unordered_map<std::string, int> entries;  // lowercase word -> valence

  std::optional<int> valence(const std::string& word) const;
};

// Tab-separated word<TAB>valence. Multi-word phrases are skipped.
SentimentLexicon load_afinn(const std::filesystem::path& path);
// Two newline-separated word lists; ';' starts a comment line.
SentimentLexicon load_bing(const std::filesystem::path& positive,
                           const std::filesystem::path& negative);

struct FrequencyTable {
  std::unordered_map<std::string, double> per_million;
  std::unordered_map<std::string, double> log_freq;  // natural log

  std::optional<double> log_frequency(const std::string& word) const;
};

// CSV word,freq_per_million with an optional header row. Case variants of a
// word are summed.
FrequencyTable load_frequency(const std::filesystem::path& path);
FrequencyTable make_frequency_table(
    const std::vector<std::pair<std::string, double>>& words);

// Strips leading whitespace and lowercases; returns the word only when the
// remainder is ASCII letters with optional internal apostrophes.
std::optional<std::string> normalize_token(std::string_view text);

struct LexicalJoinRow {
  Key key;
  std::string word;
  double score = 0.0;
  int valence = 0;
  std::optional<double> log_freq;
};

std::vector<LexicalJoinRow> join_lexical(const ScoreTable& table,
                                         const Vocabulary& vocab,
                                         const SentimentLexicon& lexicon,
                                         const FrequencyTable* freq = nullptr);

struct SentimentSlopes {
  RegressionResult positive;
  RegressionResult negative;
  RegressionResult all;

  double beta_pos() const { return positive.betas.at(1); }
  double beta_neg() const { return negative.betas.at(1); }
  double beta_all() const { return all.betas.at(1); }
};

SentimentSlopes sentiment_slopes(std::span<const LexicalJoinRow> rows);
// Score on valence over all rows; the only fit defined for +-1 lexicons.
RegressionResult sentiment_slope_all(std::span<const LexicalJoinRow> rows);

struct PairedTest {
  double t = 0.0;
  int df = 0;
  double p = 1.0;  // two-sided
  double mean_diff = 0.0;
};

// One-sample t test on beta_pos - beta_neg across models.
PairedTest paired_slope_test(std::span<const std::pair<double, double>> pos_neg);

RegressionResult frequency_regression(std::span<const LexicalJoinRow> rows,
                                      bool control_sentiment);

struct FramingAxes {
  ScoreTable sum;   // best + worst
  ScoreTable diff;  // best - worst
};

FramingAxes framing_axes(const ScoreTable& best, const ScoreTable& worst);

}  // namespace rmscope
