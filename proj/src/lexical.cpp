#include "rmscope/lexical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rmscope/error.hpp"
#include "rmscope/numerics.hpp"

namespace rmscope {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  return in;
}

void insert_valence(SentimentLexicon& lex, const std::string& word, int valence,
                    const std::string& where) {
  const auto [it, inserted] = lex.entries.emplace(word, valence);
  if (!inserted && it->second != valence) {
    throw Error(ErrorKind::kDuplicateKey,
                where + ": conflicting valence for '" + word + "'");
  }
}

void load_word_list(SentimentLexicon& lex, const std::filesystem::path& path,
                    int valence) {
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto word = trim(line);
    if (word.empty() || word[0] == ';') continue;
    if (word.find(' ') != std::string::npos) continue;
    insert_valence(lex, lowercase(word), valence, path.string());
  }
}

}  // namespace

std::optional<int> SentimentLexicon::valence(const std::string& word) const {
  const auto it = entries.find(word);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

std::optional<double> FrequencyTable::log_frequency(const std::string& word) const {
  const auto it = log_freq.find(word);
  if (it == log_freq.end()) return std::nullopt;
  return it->second;
}

SentimentLexicon load_afinn(const std::filesystem::path& path) {
  auto in = open_input(path);
  SentimentLexicon lex;
  lex.source = LexiconSource::kAfinn;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tab = line.rfind('\t');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) {
      throw Error(ErrorKind::kParseError, where + ": expected word<TAB>valence",
                  line_no);
    }
    const auto word = lowercase(trim(std::string_view(line).substr(0, tab)));
    int valence = 0;
    try {
      std::size_t used = 0;
      const auto field = trim(std::string_view(line).substr(tab + 1));
      valence = std::stoi(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParseError, where + ": bad valence", line_no);
    }
    if (valence < -5 || valence > 5) {
      throw Error(ErrorKind::kParseError, where + ": valence outside [-5, 5]", line_no);
    }
    if (word.empty() || word.find(' ') != std::string::npos) continue;
    insert_valence(lex, word, valence, where);
  }
  return lex;
}

SentimentLexicon load_bing(const std::filesystem::path& positive,
                           const std::filesystem::path& negative) {
  SentimentLexicon lex;
  lex.source = LexiconSource::kBing;
  load_word_list(lex, positive, +1);
  load_word_list(lex, negative, -1);
  return lex;
}

FrequencyTable make_frequency_table(
    const std::vector<std::pair<std::string, double>>& words) {
  FrequencyTable table;
  for (const auto& [raw, f] : words) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "frequency for '" + raw + "' must be positive and finite");
    }
    table.per_million[lowercase(trim(raw))] += f;
  }
  for (const auto& [w, f] : table.per_million) table.log_freq[w] = std::log(f);
  return table;
}

FrequencyTable load_frequency(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::pair<std::string, double>> words;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.rfind(',');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (comma == std::string::npos) {
      throw Error(ErrorKind::kParseError, where + ": expected word,freq", line_no);
    }
    const auto field = trim(std::string_view(line).substr(comma + 1));
    double f = 0.0;
    try {
      std::size_t used = 0;
      f = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header row
      throw Error(ErrorKind::kParseError, where + ": bad frequency", line_no);
    }
    words.emplace_back(std::string(line.substr(0, comma)), f);
  }
  return make_frequency_table(words);
}

std::optional<std::string> normalize_token(std::string_view text) {
  std::size_t b = 0;
  while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  const auto rest = text.substr(b);
  if (rest.empty()) return std::nullopt;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const auto c = static_cast<unsigned char>(rest[i]);
    if (std::isalpha(c) && c < 0x80) continue;
    const bool internal = i > 0 && i + 1 < rest.size();
    if (c == '\'' && internal && rest[i - 1] != '\'') continue;
    return std::nullopt;
  }
  return lowercase(rest);
}

std::vector<LexicalJoinRow> join_lexical(const ScoreTable& table,
                                         const Vocabulary& vocab,
                                         const SentimentLexicon& lexicon,
                                         const FrequencyTable* freq) {
  require_exhaustive(table, vocab);
  std::vector<LexicalJoinRow> rows;
  for (const auto& e : table.entries()) {
    const auto* tok = vocab.find(std::get<TokenId>(e.key));
    const auto word = normalize_token(tok->text);
    if (!word) continue;
    const auto valence = lexicon.valence(*word);
    if (!valence) continue;
    LexicalJoinRow row{e.key, *word, e.score, *valence, std::nullopt};
    if (freq) row.log_freq = freq->log_frequency(*word);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(ErrorKind::kEmptyJoin,
                "no token of " + table.model_id() + "/" + table.prompt_id() +
                    " matched the lexicon");
  }
  return rows;
}

namespace {

RegressionResult regress_on_valence(std::span<const LexicalJoinRow> rows,
                                    const std::string& cls) {
  if (rows.size() < 3) {
    throw Error(ErrorKind::kInsufficientData,
                "sentiment: class '" + cls + "' has " + std::to_string(rows.size()) +
                    " rows, need >= 3");
  }
  const bool constant = std::all_of(rows.begin(), rows.end(), [&](const auto& r) {
    return r.valence == rows.front().valence;
  });
  if (constant) {
    throw Error(ErrorKind::kInsufficientData,
                "sentiment: class '" + cls + "' has constant valence");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 1);
  std::vector<double> y;
  y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = rows[i].valence;
    y.push_back(rows[i].score);
  }
  return ols(x, y, true);
}

}  // namespace

RegressionResult sentiment_slope_all(std::span<const LexicalJoinRow> rows) {
  return regress_on_valence(rows, "all");
}

SentimentSlopes sentiment_slopes(std::span<const LexicalJoinRow> rows) {
  std::vector<LexicalJoinRow> pos, neg;
  for (const auto& r : rows) {
    if (r.valence > 0) pos.push_back(r);
    if (r.valence < 0) neg.push_back(r);
  }
  return {regress_on_valence(pos, "positive"), regress_on_valence(neg, "negative"),
          regress_on_valence(rows, "all")};
}

PairedTest paired_slope_test(std::span<const std::pair<double, double>> pos_neg) {
  const std::size_t m = pos_neg.size();
  if (m < 2) throw Error(ErrorKind::kInsufficientData, "paired test: need >= 2 models");
  std::vector<double> d;
  for (const auto& [p, n] : pos_neg) d.push_back(p - n);
  const double mean = stable_sum(d) / static_cast<double>(m);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));

  PairedTest out;
  out.df = static_cast<int>(m - 1);
  out.mean_diff = mean;
  if (sd == 0.0) {
    if (mean == 0.0) {
      throw Error(ErrorKind::kZeroVariance, "paired test: all differences are zero");
    }
    out.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
    out.p = 0.0;
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(m)));
  out.p = t_two_sided_p(out.t, out.df);
  return out;
}

RegressionResult frequency_regression(std::span<const LexicalJoinRow> rows,
                                      bool control_sentiment) {
  std::vector<const LexicalJoinRow*> usable;
  for (const auto& r : rows)
    if (r.log_freq) usable.push_back(&r);
  const std::size_t k = control_sentiment ? 2 : 1;
  if (usable.size() < k + 2) {
    throw Error(ErrorKind::kInsufficientData,
                "frequency: " + std::to_string(usable.size()) +
                    " rows carry a frequency");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(usable.size()),
                    static_cast<Eigen::Index>(k));
  std::vector<double> y;
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = *usable[i]->log_freq;
    if (control_sentiment) x(r, 1) = usable[i]->valence;
    y.push_back(usable[i]->score);
  }
  return ols(x, y, true);
}

FramingAxes framing_axes(const ScoreTable& best, const ScoreTable& worst) {
  if (best.model_id() != worst.model_id()) {
    throw Error(ErrorKind::kInconsistentHeader,
                "framing: tables come from different models (" + best.model_id() +
                    " vs " + worst.model_id() + ")");
  }
  std::size_t mismatch = 0;
  for (const auto& e : best.entries())
    if (!worst.find(e.key)) ++mismatch;
  for (const auto& e : worst.entries())
    if (!best.find(e.key)) ++mismatch;
  if (mismatch != 0) {
    throw Error(ErrorKind::kKeyMismatch,
                "framing: " + std::to_string(mismatch) + " keys differ",
                static_cast<std::int64_t>(mismatch));
  }
  std::vector<ScoreEntry> sum, diff;
  sum.reserve(best.size());
  diff.reserve(best.size());
  for (const auto& e : best.entries()) {
    const double w = worst.find(e.key)->score;
    sum.push_back({e.key, e.text, e.score + w});
    diff.push_back({e.key, e.text, e.score - w});
  }
  const auto tag = best.prompt_id() + "+" + worst.prompt_id();
  const auto dtag = best.prompt_id() + "-" + worst.prompt_id();
  return {ScoreTable(best.model_id(), tag, std::move(sum)),
          ScoreTable(best.model_id(), dtag, std::move(diff))};
}

}  // namespace rmscope
