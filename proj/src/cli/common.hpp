#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rmscope/corpus.hpp"
#include "rmscope/lexical.hpp"
#include "rmscope/numerics.hpp"
#include "rmscope/report.hpp"

namespace rmscope::cli {

struct CommonOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string format = "csv";
  std::string out = "-";
};

using Action = std::function<void()>;

struct Registry {
  std::vector<std::pair<CLI::App*, Action>> commands;
  void add(CLI::App* sub, Action action) { commands.emplace_back(sub, std::move(action)); }
};

// --seed, --workers, --format, --out
void add_common(CLI::App* sub, CommonOptions& opts, const std::string& out_help);

Provenance make_provenance(const CommonOptions& opts,
                           const std::vector<std::string>& inputs);

void emit(const CommonOptions& opts, const Table& table, const Provenance& prov);
void emit_to(const std::string& path, const CommonOptions& opts, const Table& table,
             const Provenance& prov);

std::vector<ScoreTable> load_dumps(const std::vector<std::string>& paths);
std::vector<Vocabulary> load_vocabs(const std::vector<std::string>& paths);
// One vocabulary shared by every dump, or one per dump.
const Vocabulary& vocab_for(const std::vector<Vocabulary>& vocabs, std::size_t i,
                            std::size_t n_dumps);

struct LexiconOptions {
  std::string afinn;
  std::string bing_positive;
  std::string bing_negative;
};

void add_lexicon_options(CLI::App* sub, LexiconOptions& opts);
SentimentLexicon load_lexicon(const LexiconOptions& opts);
std::vector<std::string> lexicon_inputs(const LexiconOptions& opts);

// term, beta, stderr, t, p, ci_low, ci_high, r_squared, n
std::vector<std::string> regression_columns();
std::vector<Cell> regression_row(const RegressionResult& r, std::size_t i,
                                 const std::string& term);
std::size_t n_obs(const RegressionResult& r);

std::string safe_filename(const std::string& s);

void register_data(CLI::App& app, Registry& reg);
void register_compare(CLI::App& app, Registry& reg);
void register_lexical(CLI::App& app, Registry& reg);
void register_elo(CLI::App& app, Registry& reg);
void register_gcg(CLI::App& app, Registry& reg);

}  // namespace rmscope::cli
