#include <iostream>
#include <map>

#include "cli/common.hpp"
#include "rmscope/error.hpp"
#include "rmscope/rankcorr.hpp"

namespace rmscope::cli {

namespace {

struct CompareOptions {
  CommonOptions common;
  std::vector<std::string> dumps;
  std::vector<std::string> vocabs;
  std::string metric = "kendall";
};

void run_compare(const CompareOptions& o) {
  const auto metric = parse_metric(o.metric);
  const auto tables = load_dumps(o.dumps);
  if (tables.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "compare: need at least two dumps");
  }
  std::vector<std::string> inputs = o.dumps;
  inputs.insert(inputs.end(), o.vocabs.begin(), o.vocabs.end());
  const auto prov = make_provenance(o.common, inputs);

  AlignedScores aligned;
  if (o.vocabs.empty()) {
    aligned = shared_key_join(tables);
  } else {
    if (o.vocabs.size() != tables.size()) {
      throw Error(ErrorKind::kInvalidArgument, "compare: give one --vocab per dump");
    }
    aligned = shared_token_join(tables, load_vocabs(o.vocabs));
  }
  const auto corr = correlation_matrix(aligned, metric, o.common.workers);
  emit(o.common, correlation_table(corr), prov);
}

struct MdsOptions {
  CommonOptions common;
  std::string corr;
};

void run_mds(const MdsOptions& o) {
  const auto corr = read_correlation_csv(o.corr);
  const auto prov = make_provenance(o.common, {o.corr});
  const auto mds = mds_2d(corr);
  if (mds.negative_mass_flag) {
    std::cerr << "rmscope mds: warning: negative eigenvalue mass "
              << format_double(mds.negative_mass)
              << " exceeds 1%; distances are not Euclidean\n";
  }
  Table out;
  out.columns = {"model_id", "x", "y"};
  for (std::size_t i = 0; i < corr.model_ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.add_row({corr.model_ids[i], mds.coords(r, 0), mds.coords(r, 1)});
  }
  emit(o.common, out, prov);
}

struct RsaOptions {
  CommonOptions common;
  std::string corr;
  std::string models;
  std::string mode = "simple";
  std::vector<std::string> factors{"base_model", "developer", "params", "rank"};
  double alpha_in = 0.05;
  double alpha_out = 0.05;
};

FactorKind parse_factor(const std::string& s) {
  for (auto k : {FactorKind::kBaseModel, FactorKind::kDeveloper, FactorKind::kParams,
                 FactorKind::kRank}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown factor '" + s + "'");
}

// Metadata reordered to the correlation matrix's model order.
std::vector<TheoreticalMatrix> theory_for(const CorrelationMatrix& corr,
                                          const RsaOptions& o) {
  const auto metas = load_model_meta(o.models);
  std::map<std::string, const ModelMeta*> by_id;
  for (const auto& m : metas) by_id[m.model_id] = &m;
  std::vector<ModelMeta> ordered;
  std::size_t missing = 0;
  for (const auto& id : corr.model_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      std::cerr << "rmscope: no metadata for model '" << id << "'\n";
      ++missing;
      continue;
    }
    ordered.push_back(*it->second);
  }
  if (missing) {
    throw Error(ErrorKind::kKeyMismatch, "models without metadata",
                static_cast<std::int64_t>(missing));
  }
  std::vector<TheoreticalMatrix> theory;
  for (const auto& f : o.factors) theory.push_back(build_theoretical(ordered, parse_factor(f)));
  return theory;
}

void run_rsa(const RsaOptions& o) {
  RsaMode mode;
  if (o.mode == "simple") {
    mode = RsaMode::kSimpleEach;
  } else if (o.mode == "multiple") {
    mode = RsaMode::kMultiple;
  } else {
    throw Error(ErrorKind::kInvalidArgument, "rsa: unknown mode '" + o.mode + "'");
  }
  const auto corr = read_correlation_csv(o.corr);
  const auto prov = make_provenance(o.common, {o.corr, o.models});
  const auto theory = theory_for(corr, o);
  const auto fits = rsa_regress(corr, theory, mode);

  Table out;
  out.columns = regression_columns();
  out.columns.insert(out.columns.begin(), "fit");
  for (const auto& fit : fits) {
    const std::string name = mode == RsaMode::kMultiple ? "multiple" : fit.factors.front();
    for (std::size_t i = 0; i < fit.result.betas.size(); ++i) {
      const std::string term = i == 0 ? "intercept" : fit.factors[i - 1];
      auto row = regression_row(fit.result, i, term);
      row.insert(row.begin(), name);
      out.add_row(std::move(row));
    }
  }
  emit(o.common, out, prov);
}

void run_stepwise(const RsaOptions& o) {
  const auto corr = read_correlation_csv(o.corr);
  const auto prov = make_provenance(o.common, {o.corr, o.models});
  const auto theory = theory_for(corr, o);
  const auto sel = stepwise(corr, theory, o.alpha_in, o.alpha_out);

  Table out;
  out.columns = regression_columns();
  if (sel.empty_selection) {
    std::cerr << "rmscope stepwise: EmptySelection, no factor entered at alpha "
              << format_double(o.alpha_in) << '\n';
  } else {
    const auto& fit = *sel.final_fit;
    for (std::size_t i = 0; i < fit.betas.size(); ++i) {
      out.add_row(regression_row(fit, i, i == 0 ? "intercept" : sel.factors[i - 1]));
    }
  }
  emit(o.common, out, prov);
}

void add_rsa_options(CLI::App* sub, RsaOptions& o) {
  add_common(sub, o.common, "Output file (default stdout)");
  sub->add_option("--corr", o.corr, "Correlation matrix CSV from compare")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--models", o.models, "Model metadata JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--factors", o.factors, "Theoretical factors, in order")
      ->delimiter(',')
      ->capture_default_str();
}

}  // namespace

void register_compare(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<CompareOptions>();
    auto* sub = app.add_subcommand("compare", "Pairwise rank correlation between dumps");
    add_common(sub, o->common, "Correlation matrix CSV (default stdout)");
    sub->add_option("--dumps", o->dumps, "Score dumps")->required()->check(CLI::ExistingFile);
    sub->add_option("--vocab", o->vocabs, "One vocabulary per dump; join on token text")
        ->check(CLI::ExistingFile);
    sub->add_option("--metric", o->metric, "kendall, spearman or pearson")
        ->check(CLI::IsMember({"kendall", "spearman", "pearson"}))
        ->capture_default_str();
    reg.add(sub, [o] { run_compare(*o); });
  }
  {
    auto o = std::make_shared<MdsOptions>();
    auto* sub = app.add_subcommand("mds", "Classical MDS of 1 - correlation");
    add_common(sub, o->common, "Output file (default stdout)");
    sub->add_option("--corr", o->corr, "Correlation matrix CSV")
        ->required()
        ->check(CLI::ExistingFile);
    reg.add(sub, [o] { run_mds(*o); });
  }
  {
    auto o = std::make_shared<RsaOptions>();
    auto* sub = app.add_subcommand("rsa", "Regress correlations on model metadata");
    add_rsa_options(sub, *o);
    sub->add_option("--mode", o->mode, "simple (one fit per factor) or multiple")
        ->check(CLI::IsMember({"simple", "multiple"}))
        ->capture_default_str();
    reg.add(sub, [o] { run_rsa(*o); });
  }
  {
    auto o = std::make_shared<RsaOptions>();
    auto* sub = app.add_subcommand("stepwise", "Stepwise selection of metadata factors");
    add_rsa_options(sub, *o);
    sub->add_option("--alpha-in", o->alpha_in, "Entry threshold")->capture_default_str();
    sub->add_option("--alpha-out", o->alpha_out, "Removal threshold")->capture_default_str();
    reg.add(sub, [o] { run_stepwise(*o); });
  }
}

}  // namespace rmscope::cli
