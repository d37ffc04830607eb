#include "rmscope/cli.hpp"

#include <cctype>
#include <iostream>

#include "cli/common.hpp"
#include "rmscope/error.hpp"
#include "rmscope/parallel.hpp"

namespace rmscope {

namespace cli {

void add_common(CLI::App* sub, CommonOptions& opts, const std::string& out_help) {
  opts.workers = default_worker_count();
  sub->add_option("--seed", opts.seed, "Seed recorded in output headers")
      ->capture_default_str();
  sub->add_option("--workers", opts.workers, "Worker threads (default: RMSCOPE_WORKERS)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  sub->add_option("--out", opts.out, out_help);
}

Provenance make_provenance(const CommonOptions& opts,
                           const std::vector<std::string>& inputs) {
  Provenance prov;
  prov.seed = opts.seed;
  for (const auto& p : inputs) prov.add_input(p);
  return prov;
}

void emit(const CommonOptions& opts, const Table& table, const Provenance& prov) {
  write_table(opts.out, table, parse_format(opts.format), prov);
}

void emit_to(const std::string& path, const CommonOptions& opts, const Table& table,
             const Provenance& prov) {
  write_table(path, table, parse_format(opts.format), prov);
}

std::vector<ScoreTable> load_dumps(const std::vector<std::string>& paths) {
  std::vector<ScoreTable> tables;
  for (const auto& p : paths) {
    auto loaded = load_score_dump(p);
    for (const auto& w : loaded.warnings) std::cerr << "rmscope: warning: " << w << '\n';
    tables.push_back(std::move(loaded.table));
  }
  return tables;
}

std::vector<Vocabulary> load_vocabs(const std::vector<std::string>& paths) {
  std::vector<Vocabulary> vocabs;
  for (const auto& p : paths) vocabs.push_back(load_vocabulary(p));
  return vocabs;
}

const Vocabulary& vocab_for(const std::vector<Vocabulary>& vocabs, std::size_t i,
                            std::size_t n_dumps) {
  if (vocabs.size() == 1) return vocabs.front();
  if (vocabs.size() != n_dumps) {
    throw Error(ErrorKind::kInvalidArgument,
                "--vocab takes one file or one per dump (" + std::to_string(n_dumps) + ")");
  }
  return vocabs[i];
}

void add_lexicon_options(CLI::App* sub, LexiconOptions& opts) {
  sub->add_option("--afinn", opts.afinn, "AFINN lexicon (word<TAB>valence)")
      ->check(CLI::ExistingFile);
  sub->add_option("--bing-positive", opts.bing_positive, "Bing positive word list")
      ->check(CLI::ExistingFile);
  sub->add_option("--bing-negative", opts.bing_negative, "Bing negative word list")
      ->check(CLI::ExistingFile);
}

SentimentLexicon load_lexicon(const LexiconOptions& opts) {
  const bool afinn = !opts.afinn.empty();
  const bool bing = !opts.bing_positive.empty() || !opts.bing_negative.empty();
  if (afinn == bing) {
    throw Error(ErrorKind::kInvalidArgument,
                "give either --afinn or both --bing-positive and --bing-negative");
  }
  if (afinn) return load_afinn(opts.afinn);
  if (opts.bing_positive.empty() || opts.bing_negative.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "Bing needs both --bing-positive and --bing-negative");
  }
  return load_bing(opts.bing_positive, opts.bing_negative);
}

std::vector<std::string> lexicon_inputs(const LexiconOptions& opts) {
  std::vector<std::string> out;
  for (const auto* p : {&opts.afinn, &opts.bing_positive, &opts.bing_negative}) {
    if (!p->empty()) out.push_back(*p);
  }
  return out;
}

std::vector<std::string> regression_columns() {
  return {"term", "beta", "stderr", "t", "p", "ci_low", "ci_high", "r_squared", "n"};
}

std::size_t n_obs(const RegressionResult& r) {
  return static_cast<std::size_t>(r.df_resid) + r.betas.size();
}

std::vector<Cell> regression_row(const RegressionResult& r, std::size_t i,
                                 const std::string& term) {
  const double half = r.ci_half_width(i);
  return {term,
          r.betas[i],
          r.stderrs[i],
          r.t_stats[i],
          r.p_values[i],
          r.betas[i] - half,
          r.betas[i] + half,
          r.r_squared,
          static_cast<std::int64_t>(n_obs(r))};
}

std::string safe_filename(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    const bool ok = std::isalnum(c) || c == '-' || c == '_' || c == '.';
    out += ok ? static_cast<char>(c) : '_';
  }
  return out.empty() ? "_" : out;
}

}  // namespace cli

int run(int argc, const char* const* argv) {
  CLI::App app{"Reward-model interpretability toolkit", "rmscope"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kToolVersion);

  cli::Registry reg;
  cli::register_data(app, reg);
  cli::register_compare(app, reg);
  cli::register_lexical(app, reg);
  cli::register_elo(app, reg);
  cli::register_gcg(app, reg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  for (const auto& [sub, action] : reg.commands) {
    if (!sub->parsed()) continue;
    try {
      action();
      return 0;
    } catch (const Error& e) {
      std::cerr << "rmscope " << sub->get_name() << ": " << e.what() << '\n';
      return e.kind() == ErrorKind::kInvalidArgument ? 1 : 2;
    } catch (const std::exception& e) {
      std::cerr << "rmscope " << sub->get_name() << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rmscope
