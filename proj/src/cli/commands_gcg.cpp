#include <iostream>
#include <sstream>

#include "cli/common.hpp"
#include "rmscope/error.hpp"
#include "rmscope/gcg.hpp"
#include "rmscope/toyrm.hpp"

namespace rmscope::cli {

namespace {

struct GcgOptions {
  CommonOptions common;
  std::string toy_spec;
  std::string prompts;
  std::string prompt_id;
  std::string vocab;
  std::string config_file;
  std::string best_out;
  std::string start;
  GcgConfig config;
  std::string objective = "maximize";
  bool no_history = false;

  CLI::Option* seed_opt = nullptr;
  std::vector<std::pair<CLI::Option*, std::function<void(GcgConfig&)>>> overrides;
};

std::vector<TokenId> parse_start(const std::string& s) {
  std::vector<TokenId> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidArgument, "gcg: bad --start token '" + part + "'");
    }
  }
  return out;
}

void run_gcg(GcgOptions& o) {
  GcgConfig config = o.config_file.empty() ? GcgConfig{} : load_gcg_config(o.config_file);
  for (auto& [opt, apply] : o.overrides) {
    if (opt->count() > 0) apply(config);
  }
  if (o.seed_opt->count() > 0 || o.config_file.empty()) config.seed = o.common.seed;
  config.workers = o.common.workers;

  const ToySpec spec = load_toy_spec(o.toy_spec);
  std::optional<Vocabulary> vocab;
  if (!o.vocab.empty()) vocab = load_vocabulary(o.vocab);
  const auto scorer = make_scorer(spec, vocab ? &*vocab : nullptr);

  const auto prompts = load_prompts(o.prompts);
  const PromptSpec* prompt = &prompts.front();
  if (!o.prompt_id.empty()) {
    prompt = nullptr;
    for (const auto& p : prompts) {
      if (p.prompt_id == o.prompt_id) prompt = &p;
    }
    if (!prompt) {
      throw Error(ErrorKind::kInvalidArgument, "gcg: unknown prompt id '" + o.prompt_id + "'");
    }
  }

  std::vector<TokenId> start =
      o.start.empty() ? seeded_start(config, scorer->vocab_size()) : parse_start(o.start);
  for (TokenId t : start) {
    if (t < 0 || static_cast<std::size_t>(t) >= scorer->vocab_size()) {
      throw Error(ErrorKind::kTokenOutOfRange, "gcg: start token out of range", t);
    }
  }

  std::vector<std::string> inputs{o.toy_spec, o.prompts};
  if (!o.vocab.empty()) inputs.push_back(o.vocab);
  if (!o.config_file.empty()) inputs.push_back(o.config_file);
  Provenance prov = make_provenance(o.common, inputs);
  prov.seed = config.seed;

  const auto result = gcg_search(*prompt, start, *scorer, config);
  if (result.exhausted) std::cerr << "rmscope gcg: neighbourhood exhausted, stopped early\n";

  Table trace;
  trace.columns = {"iteration", "current_score", "best_score"};
  for (const auto& row : result.trace) {
    trace.add_row({static_cast<std::int64_t>(row.iteration), row.current_score, row.best_score});
  }
  emit(o.common, trace, prov);

  if (!o.best_out.empty()) {
    Table best;
    best.columns = {"position", "token_id", "token_text", "best_score"};
    for (std::size_t i = 0; i < result.best.size(); ++i) {
      std::string text;
      if (vocab) {
        if (const auto* e = vocab->find(result.best[i])) text = e->text;
      }
      best.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(result.best[i]),
                    text, result.best_score});
    }
    emit_to(o.best_out, o.common, best, prov);
  }
}

}  // namespace

void register_gcg(CLI::App& app, Registry& reg) {
  auto o = std::make_shared<GcgOptions>();
  auto* sub = app.add_subcommand("gcg", "Gradient-guided search for extreme-scoring sequences");
  add_common(sub, o->common, "Trace CSV (default stdout)");
  o->seed_opt = sub->get_option("--seed");
  sub->add_option("--toy-spec", o->toy_spec, "Toy model spec JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--prompt,--prompts", o->prompts, "Prompt list JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--prompt-id", o->prompt_id, "Prompt to optimize for (default: first)");
  sub->add_option("--vocab", o->vocab, "Vocabulary JSONL (decoded text, planted scorers)")
      ->check(CLI::ExistingFile);
  sub->add_option("--config", o->config_file, "Search config JSON")->check(CLI::ExistingFile);
  sub->add_option("--best-out", o->best_out, "Best sequence, token ids and text");
  sub->add_option("--start", o->start, "Comma-separated start token ids (default: seeded)");

  auto& c = o->config;
  auto& ov = o->overrides;
  ov.emplace_back(sub->add_option("--seq-len", c.seq_len, "Response length")
                      ->check(CLI::PositiveNumber),
                  [p = o.get()](GcgConfig& g) { g.seq_len = p->config.seq_len; });
  ov.emplace_back(sub->add_option("--iterations", c.iterations, "Search steps")
                      ->check(CLI::PositiveNumber),
                  [p = o.get()](GcgConfig& g) { g.iterations = p->config.iterations; });
  ov.emplace_back(sub->add_option("--top-k", c.top_k, "Candidates kept per position")
                      ->check(CLI::PositiveNumber),
                  [p = o.get()](GcgConfig& g) { g.top_k = p->config.top_k; });
  ov.emplace_back(sub->add_option("--eval-budget", c.eval_budget, "Exact evaluations per step")
                      ->check(CLI::PositiveNumber),
                  [p = o.get()](GcgConfig& g) { g.eval_budget = p->config.eval_budget; });
  ov.emplace_back(sub->add_option("--objective", o->objective, "maximize or minimize")
                      ->check(CLI::IsMember({"maximize", "minimize"})),
                  [p = o.get()](GcgConfig& g) { g.objective = parse_objective(p->objective); });
  ov.emplace_back(sub->add_option("--target", c.target, "Target magnitude for the MSE loss"),
                  [p = o.get()](GcgConfig& g) { g.target = p->config.target; });
  ov.emplace_back(sub->add_flag("--no-history", o->no_history, "Allow revisiting sequences"),
                  [p = o.get()](GcgConfig& g) { g.history_on = !p->no_history; });
  reg.add(sub, [o] { run_gcg(*o); });
}

}  // namespace rmscope::cli
