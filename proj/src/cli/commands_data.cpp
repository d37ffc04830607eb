#include <filesystem>
#include <iostream>

#include "cli/common.hpp"
#include "rmscope/error.hpp"
#include "rmscope/stats.hpp"
#include "rmscope/toyrm.hpp"

namespace rmscope::cli {

namespace {

struct ScoreOptions {
  CommonOptions common;
  std::string toy_spec;
  std::string prompts;
  std::vector<std::string> prompt_ids;
  std::string vocab;
  std::string items;
};

void run_score(const ScoreOptions& o) {
  if (o.common.out.empty() || o.common.out == "-") {
    throw Error(ErrorKind::kInvalidArgument, "score: --out must name a directory");
  }
  if (o.vocab.empty() && o.items.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "score: need --vocab or --items");
  }
  const ToySpec spec = load_toy_spec(o.toy_spec);
  std::optional<Vocabulary> vocab;
  if (!o.vocab.empty()) vocab = load_vocabulary(o.vocab);
  const auto scorer = make_scorer(spec, vocab ? &*vocab : nullptr);

  std::vector<std::string> inputs{o.toy_spec, o.prompts};
  if (!o.vocab.empty()) inputs.push_back(o.vocab);
  if (!o.items.empty()) inputs.push_back(o.items);
  if (spec.planted) {
    inputs.push_back(spec.planted->lexicon.string());
    if (!spec.planted->lexicon_negative.empty()) {
      inputs.push_back(spec.planted->lexicon_negative.string());
    }
    if (spec.planted->frequency) inputs.push_back(spec.planted->frequency->string());
  }
  const auto header = make_provenance(o.common, inputs).lines();

  std::vector<ItemSpec> items;
  if (!o.items.empty()) items = load_items(o.items);

  auto prompts = load_prompts(o.prompts);
  if (!o.prompt_ids.empty()) {
    std::vector<PromptSpec> chosen;
    for (const auto& id : o.prompt_ids) {
      auto it = std::find_if(prompts.begin(), prompts.end(),
                             [&](const PromptSpec& p) { return p.prompt_id == id; });
      if (it == prompts.end()) {
        throw Error(ErrorKind::kInvalidArgument, "score: unknown prompt id '" + id + "'");
      }
      chosen.push_back(*it);
    }
    prompts = std::move(chosen);
  }

  std::filesystem::create_directories(o.common.out);
  for (const auto& prompt : prompts) {
    const ScoreTable table =
        items.empty()
            ? exhaustive_score(*scorer, prompt, *vocab, spec.model_id, o.common.workers)
            : score_items(*scorer, prompt, items, spec.model_id, o.common.workers);
    const auto path = std::filesystem::path(o.common.out) /
                      (safe_filename(spec.model_id) + "__" +
                       safe_filename(prompt.prompt_id) + ".jsonl");
    save_score_dump(table, path, header);
    std::cerr << "wrote " << path.string() << " (" << table.size() << " records)\n";
  }
}

struct StatsOptions {
  CommonOptions common;
  std::vector<std::string> dumps;
  std::vector<std::string> vocabs;
  std::string samples_out;
};

void run_stats(const StatsOptions& o) {
  const auto tables = load_dumps(o.dumps);
  std::vector<std::string> inputs = o.dumps;
  inputs.insert(inputs.end(), o.vocabs.begin(), o.vocabs.end());
  const auto prov = make_provenance(o.common, inputs);

  Table out;
  out.columns = {"model_id", "prompt_id", "n", "mean", "variance", "skewness"};
  Table samples;
  samples.columns = {"model_id", "prompt_id", "key", "score"};

  auto add = [&](const ScoreTable& t, std::span<const double> xs,
                 const std::vector<std::string>& keys) {
    const auto m = moments(xs);
    out.add_row({t.model_id(), t.prompt_id(), static_cast<std::int64_t>(m.n), m.mean,
                 m.variance, *m.skewness});
    if (!o.samples_out.empty()) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        samples.add_row({t.model_id(), t.prompt_id(), keys[i], xs[i]});
      }
    }
  };

  if (o.vocabs.empty()) {
    for (const auto& t : tables) {
      std::vector<std::string> keys;
      for (const auto& e : t.entries()) keys.push_back(key_to_string(e.key));
      const auto xs = t.scores();
      add(t, xs, keys);
    }
  } else {
    if (o.vocabs.size() != tables.size()) {
      throw Error(ErrorKind::kInvalidArgument, "stats: give one --vocab per dump");
    }
    // Moments over the tokens every model shares.
    const auto vocabs = load_vocabs(o.vocabs);
    const auto aligned = shared_token_join(tables, vocabs);
    for (std::size_t j = 0; j < tables.size(); ++j) {
      add(tables[j], aligned.column(j), aligned.row_texts);
    }
  }
  emit(o.common, out, prov);
  if (!o.samples_out.empty()) emit_to(o.samples_out, o.common, samples, prov);
}

struct ExtremesOptions {
  CommonOptions common;
  std::string dump;
  std::size_t k = 10;
};

void run_extremes(const ExtremesOptions& o) {
  const auto table = load_dumps({o.dump}).front();
  const auto prov = make_provenance(o.common, {o.dump});
  const auto ex = extremes(table, o.k);
  Table out;
  out.columns = {"side", "rank", "key", "text", "score"};
  auto add = [&](const char* side, const std::vector<ScoreEntry>& entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out.add_row({std::string(side), static_cast<std::int64_t>(i + 1),
                   key_to_string(entries[i].key), entries[i].text, entries[i].score});
    }
  };
  add("top", ex.top);
  add("bottom", ex.bottom);
  emit(o.common, out, prov);
}

}  // namespace

void register_data(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<ScoreOptions>();
    auto* sub = app.add_subcommand("score", "Score every token (or item) for each prompt");
    add_common(sub, o->common, "Output directory, one dump per prompt");
    sub->add_option("--toy-spec", o->toy_spec, "Toy model spec JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--prompt,--prompts", o->prompts, "Prompt list JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--prompt-id", o->prompt_ids, "Restrict to these prompt ids");
    sub->add_option("--vocab", o->vocab, "Vocabulary JSONL")->check(CLI::ExistingFile);
    sub->add_option("--items", o->items, "Item list JSONL (item mode)")
        ->check(CLI::ExistingFile);
    reg.add(sub, [o] { run_score(*o); });
  }
  {
    auto o = std::make_shared<StatsOptions>();
    auto* sub = app.add_subcommand("stats", "Mean, variance and skewness per dump");
    add_common(sub, o->common, "Output file (default stdout)");
    sub->add_option("--dumps", o->dumps, "Score dumps")->required()->check(CLI::ExistingFile);
    sub->add_option("--vocab", o->vocabs, "One vocabulary per dump; restricts to shared tokens")
        ->check(CLI::ExistingFile);
    sub->add_option("--samples-out", o->samples_out, "Long-format score samples (violin data)");
    reg.add(sub, [o] { run_stats(*o); });
  }
  {
    auto o = std::make_shared<ExtremesOptions>();
    auto* sub = app.add_subcommand("extremes", "Top-k and bottom-k entries of one dump");
    add_common(sub, o->common, "Output file (default stdout)");
    sub->add_option("--dump", o->dump, "Score dump")->required()->check(CLI::ExistingFile);
    sub->add_option("-k,--k", o->k, "Entries per side")->capture_default_str();
    reg.add(sub, [o] { run_extremes(*o); });
  }
}

}  // namespace rmscope::cli
