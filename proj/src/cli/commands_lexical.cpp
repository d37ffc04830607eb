#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>

#include "cli/common.hpp"
#include "rmscope/error.hpp"

namespace rmscope::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SentimentOptions {
  CommonOptions common;
  std::vector<std::string> dumps;
  std::vector<std::string> vocabs;
  LexiconOptions lexicon;
  std::string frequency;
  std::string paired_out;
  std::string points_out;
};

std::vector<std::string> all_inputs(const SentimentOptions& o) {
  std::vector<std::string> inputs = o.dumps;
  inputs.insert(inputs.end(), o.vocabs.begin(), o.vocabs.end());
  for (auto& p : lexicon_inputs(o.lexicon)) inputs.push_back(std::move(p));
  if (!o.frequency.empty()) inputs.push_back(o.frequency);
  return inputs;
}

// Slope, stderr, p and n of score ~ valence within one class; NaN when the
// class cannot be fitted (too few rows, or constant valence as with Bing).
struct ClassFit {
  double beta = kNaN;
  double se = kNaN;
  double p = kNaN;
  std::int64_t n = 0;
};

ClassFit fit_class(std::span<const LexicalJoinRow> rows, int sign) {
  std::vector<LexicalJoinRow> subset;
  for (const auto& r : rows) {
    if ((sign > 0 && r.valence > 0) || (sign < 0 && r.valence < 0) || sign == 0) {
      subset.push_back(r);
    }
  }
  ClassFit fit;
  fit.n = static_cast<std::int64_t>(subset.size());
  try {
    const auto r = sentiment_slope_all(subset);
    fit.beta = r.betas[1];
    fit.se = r.stderrs[1];
    fit.p = r.p_values[1];
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kInsufficientData && e.kind() != ErrorKind::kRankDeficient) {
      throw;
    }
  }
  return fit;
}

void run_sentiment(const SentimentOptions& o) {
  const auto tables = load_dumps(o.dumps);
  const auto vocabs = load_vocabs(o.vocabs);
  const auto lexicon = load_lexicon(o.lexicon);
  const auto prov = make_provenance(o.common, all_inputs(o));

  Table out;
  out.columns = {"model_id", "prompt_id", "n_pos", "beta_pos", "se_pos", "p_pos",
                 "n_neg",    "beta_neg",  "se_neg", "p_neg",   "n_all", "beta_all",
                 "se_all",   "p_all"};
  Table points;
  points.columns = {"model_id", "prompt_id", "key", "word", "valence", "score"};
  std::vector<std::pair<double, double>> pos_neg;

  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& t = tables[i];
    const auto rows = join_lexical(t, vocab_for(vocabs, i, tables.size()), lexicon);
    const auto pos = fit_class(rows, +1);
    const auto neg = fit_class(rows, -1);
    const auto all = fit_class(rows, 0);
    out.add_row({t.model_id(), t.prompt_id(), pos.n, pos.beta, pos.se, pos.p, neg.n,
                 neg.beta, neg.se, neg.p, all.n, all.beta, all.se, all.p});
    if (std::isfinite(pos.beta) && std::isfinite(neg.beta)) {
      pos_neg.emplace_back(pos.beta, neg.beta);
    }
    if (!o.points_out.empty()) {
      for (const auto& r : rows) {
        points.add_row({t.model_id(), t.prompt_id(), key_to_string(r.key), r.word,
                        static_cast<std::int64_t>(r.valence), r.score});
      }
    }
  }
  emit(o.common, out, prov);
  if (!o.points_out.empty()) emit_to(o.points_out, o.common, points, prov);
  if (!o.paired_out.empty()) {
    const auto test = paired_slope_test(pos_neg);
    Table paired;
    paired.columns = {"n_models", "mean_diff", "t", "df", "p"};
    paired.add_row({static_cast<std::int64_t>(pos_neg.size()), test.mean_diff, test.t,
                    static_cast<std::int64_t>(test.df), test.p});
    emit_to(o.paired_out, o.common, paired, prov);
  }
}

void run_frequency(const SentimentOptions& o) {
  if (o.frequency.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "frequency: --frequency is required");
  }
  const auto tables = load_dumps(o.dumps);
  const auto vocabs = load_vocabs(o.vocabs);
  const auto lexicon = load_lexicon(o.lexicon);
  const auto freq = load_frequency(o.frequency);
  const auto prov = make_provenance(o.common, all_inputs(o));

  Table out;
  out.columns = regression_columns();
  out.columns.insert(out.columns.begin(), {"model_id", "prompt_id", "controlled"});
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& t = tables[i];
    const auto rows = join_lexical(t, vocab_for(vocabs, i, tables.size()), lexicon, &freq);
    for (bool control : {false, true}) {
      const auto fit = frequency_regression(rows, control);
      for (std::size_t k = 0; k < fit.betas.size(); ++k) {
        static const char* kTerms[] = {"intercept", "log_freq", "valence"};
        auto row = regression_row(fit, k, kTerms[k]);
        row.insert(row.begin(), {t.model_id(), t.prompt_id(),
                                 std::string(control ? "yes" : "no")});
        out.add_row(std::move(row));
      }
    }
  }
  emit(o.common, out, prov);
}

struct FramingOptions {
  CommonOptions common;
  std::string best;
  std::string worst;
  std::string axes_out;
};

void run_framing(const FramingOptions& o) {
  const auto best = load_dumps({o.best}).front();
  const auto worst = load_dumps({o.worst}).front();
  const auto prov = make_provenance(o.common, {o.best, o.worst});
  const auto axes = framing_axes(best, worst);

  Table out;
  out.columns = {"model_id", "key", "text", "best", "worst", "sum", "diff"};
  const auto& b = best.entries();
  const auto& w = worst.entries();
  const auto& s = axes.sum.entries();
  const auto& d = axes.diff.entries();
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.add_row({best.model_id(), key_to_string(b[i].key), b[i].text, b[i].score,
                 w[i].score, s[i].score, d[i].score});
  }
  emit(o.common, out, prov);

  if (!o.axes_out.empty()) {
    std::filesystem::create_directories(o.axes_out);
    const auto header = prov.lines();
    const auto stem = safe_filename(best.model_id());
    save_score_dump(axes.sum, std::filesystem::path(o.axes_out) / (stem + "__sum.jsonl"),
                    header);
    save_score_dump(axes.diff, std::filesystem::path(o.axes_out) / (stem + "__diff.jsonl"),
                    header);
  }
}

void add_lexical_options(CLI::App* sub, SentimentOptions& o) {
  add_common(sub, o.common, "Output file (default stdout)");
  sub->add_option("--dumps", o.dumps, "Score dumps")->required()->check(CLI::ExistingFile);
  sub->add_option("--vocab", o.vocabs, "One vocabulary, or one per dump")
      ->required()
      ->check(CLI::ExistingFile);
  add_lexicon_options(sub, o.lexicon);
}

}  // namespace

void register_lexical(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<SentimentOptions>();
    auto* sub = app.add_subcommand("sentiment", "Score ~ valence slopes per class");
    add_lexical_options(sub, *o);
    sub->add_option("--paired-out", o->paired_out, "Paired t test of pos vs neg slopes");
    sub->add_option("--points-out", o->points_out, "Matched words with score and valence");
    reg.add(sub, [o] { run_sentiment(*o); });
  }
  {
    auto o = std::make_shared<SentimentOptions>();
    auto* sub = app.add_subcommand("frequency", "Score ~ log frequency, with and without valence");
    add_lexical_options(sub, *o);
    sub->add_option("--frequency", o->frequency, "Word frequency CSV (word,freq_per_million)")
        ->required()
        ->check(CLI::ExistingFile);
    reg.add(sub, [o] { run_frequency(*o); });
  }
  {
    auto o = std::make_shared<FramingOptions>();
    auto* sub = app.add_subcommand("framing", "best+worst and best-worst axes");
    add_common(sub, o->common, "Output file (default stdout)");
    sub->add_option("--best", o->best, "Dump for the positively framed prompt")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--worst", o->worst, "Dump for the negatively framed prompt")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--axes-out", o->axes_out, "Directory for sum/diff dumps");
    reg.add(sub, [o] { run_framing(*o); });
  }
}

}  // namespace rmscope::cli
