#include <limits>

#include "cli/common.hpp"
#include "rmscope/elo.hpp"
#include "rmscope/error.hpp"

namespace rmscope::cli {

namespace {

struct EloOptions {
  CommonOptions common;
  std::string comparisons;
  EloConfig config;
};

void run_elo(const EloOptions& o) {
  const auto log = load_comparisons(o.comparisons);
  const auto prov = make_provenance(o.common, {o.comparisons});
  const auto ratings = compute_ratings(log, o.config);
  Table out;
  out.columns = {"item_id", "rating", "count"};
  for (const auto& [item, rating] : ratings.ratings) {
    out.add_row({item, rating, ratings.counts.at(item)});
  }
  emit(o.common, out, prov);
}

struct AlignOptions {
  CommonOptions common;
  std::string ratings;
  std::string comparisons;
  std::vector<std::string> dumps;
  AlignConfig config;
  EloConfig elo;
  std::string discrepancies_out;
};

void run_align(const AlignOptions& o) {
  if (o.ratings.empty() == o.comparisons.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "align: give exactly one of --ratings or --comparisons");
  }
  std::vector<std::string> inputs{o.ratings.empty() ? o.comparisons : o.ratings};
  inputs.insert(inputs.end(), o.dumps.begin(), o.dumps.end());
  const auto prov = make_provenance(o.common, inputs);

  const RatingTable human = o.ratings.empty()
                                ? compute_ratings(load_comparisons(o.comparisons), o.elo)
                                : load_ratings(o.ratings);
  const auto tables = load_dumps(o.dumps);
  const auto report = align_ranks(human, tables, o.config);

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<std::int64_t>(report.common_items);
  Table out;
  out.columns = {"model_id", "tau", "tau_top", "tau_bottom", "n_items"};
  for (std::size_t i = 0; i < report.model_ids.size(); ++i) {
    out.add_row({report.model_ids[i], report.per_model_tau[i], report.per_model_tau_top[i],
                 report.per_model_tau_bottom[i], n});
  }
  out.add_row({std::string("mean"), report.mean_tau, report.tau_top100, report.tau_bottom100, n});
  out.add_row({std::string("sd"), report.sd_tau, nan, nan, n});
  emit(o.common, out, prov);

  if (!o.discrepancies_out.empty()) {
    Table d;
    d.columns = {"item_id", "human_rank", "mean_model_rank", "delta"};
    for (const auto& x : report.discrepancies) {
      d.add_row({x.item, x.human_rank, x.mean_model_rank, x.delta});
    }
    emit_to(o.discrepancies_out, o.common, d, prov);
  }
}

}  // namespace

void register_elo(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<EloOptions>();
    auto* sub = app.add_subcommand("elo-rate", "Elo ratings from a comparison log");
    add_common(sub, o->common, "Ratings CSV (default stdout)");
    sub->add_option("--comparisons", o->comparisons, "CSV seq,item_a,item_b,outcome")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--k", o->config.k_factor, "K factor")->capture_default_str();
    sub->add_option("--base", o->config.base_rating, "Initial rating")->capture_default_str();
    reg.add(sub, [o] { run_elo(*o); });
  }
  {
    auto o = std::make_shared<AlignOptions>();
    auto* sub = app.add_subcommand("align", "Kendall tau between human and model rankings");
    add_common(sub, o->common, "Summary table (default stdout)");
    sub->add_option("--ratings", o->ratings, "Ratings CSV item_id,rating,count")
        ->check(CLI::ExistingFile);
    sub->add_option("--comparisons", o->comparisons, "Comparison log, rated on the fly")
        ->check(CLI::ExistingFile);
    sub->add_option("--dumps", o->dumps, "Item score dumps, one per model")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--subset", o->config.subset_size, "Top/bottom subset size")
        ->capture_default_str();
    sub->add_option("--min-overlap", o->config.min_overlap, "Minimum common items")
        ->capture_default_str();
    sub->add_option("--discrepancies-out", o->discrepancies_out,
                    "Per-item human vs model rank differences");
    reg.add(sub, [o] { run_align(*o); });
  }
}

}  // namespace rmscope::cli
