#include "rmscope/gcg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rmscope/error.hpp"
#include "rmscope/parallel.hpp"

namespace rmscope {

namespace {

constexpr std::uint64_t kFingerprintSeed = 0x6763672d66707273ULL;
constexpr std::uint64_t kStartStream = 0x7374617274ULL;

std::uint64_t position_hash(std::size_t position, TokenId token) {
  return counter_hash(kFingerprintSeed, position, static_cast<std::uint64_t>(token));
}

bool better(double a, double b, Objective objective) {
  return objective == Objective::kMaximize ? a > b : a < b;
}

bool ranks_before(const GcgCandidate& a, const GcgCandidate& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.position != b.position) return a.position < b.position;
  return a.token < b.token;
}

void validate(const GcgConfig& config, std::size_t vocab_size) {
  if (config.seq_len == 0 || config.iterations == 0 || config.top_k == 0 ||
      config.eval_budget == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "gcg: seq_len, iterations, top_k and eval_budget must be >= 1");
  }
  if (config.top_k > vocab_size) {
    throw Error(ErrorKind::kInvalidArgument, "gcg: top_k exceeds vocabulary size");
  }
  if (!std::isfinite(config.target)) {
    throw Error(ErrorKind::kInvalidArgument, "gcg: target must be finite");
  }
}

}  // namespace

Objective parse_objective(const std::string& s) {
  if (s == "maximize" || s == "max") return Objective::kMaximize;
  if (s == "minimize" || s == "min") return Objective::kMinimize;
  throw Error(ErrorKind::kInvalidArgument, "unknown objective '" + s + "'");
}

std::string to_string(Objective objective) {
  return objective == Objective::kMaximize ? "maximize" : "minimize";
}

GcgConfig load_gcg_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  GcgConfig c;
  try {
    const auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw std::runtime_error("config is not an object");
    for (const auto& [key, value] : j.items()) {
      if (key == "seq_len") c.seq_len = value.get<std::size_t>();
      else if (key == "iterations") c.iterations = value.get<std::size_t>();
      else if (key == "top_k") c.top_k = value.get<std::size_t>();
      else if (key == "eval_budget") c.eval_budget = value.get<std::size_t>();
      else if (key == "objective") c.objective = parse_objective(value.get<std::string>());
      else if (key == "target") c.target = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "history_on") c.history_on = value.get<bool>();
      else throw std::runtime_error("unknown key '" + key + "'");
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
  return c;
}

double gcg_loss(double score, const GcgConfig& config) {
  const double target = config.objective == Objective::kMaximize
                            ? std::abs(config.target)
                            : -std::abs(config.target);
  const double d = score - target;
  return d * d;
}

std::uint64_t sequence_fingerprint(std::span<const TokenId> tokens) {
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) fp += position_hash(i, tokens[i]);
  return fp;
}

GcgState gcg_init(const PromptSpec& prompt, std::span<const TokenId> start,
                  const Scorer& scorer, const GcgConfig& config) {
  validate(config, scorer.vocab_size());
  if (!scorer.has_gradient()) {
    throw Error(ErrorKind::kGradientUnavailable, "gcg: scorer has no gradient");
  }
  if (start.size() != config.seq_len) {
    throw Error(ErrorKind::kInvalidArgument,
                "gcg: start length " + std::to_string(start.size()) +
                    " != seq_len " + std::to_string(config.seq_len));
  }
  GcgState state;
  state.current.assign(start.begin(), start.end());
  state.current_score = scorer.score(prompt, state.current);
  state.best = state.current;
  state.best_score = state.current_score;
  state.visited.insert(sequence_fingerprint(state.current));
  state.trace.push_back({0, state.current_score, state.best_score, 1});
  return state;
}

std::vector<GcgCandidate> propose_candidates(const GcgState& state,
                                             const Eigen::MatrixXd& grad,
                                             const GcgConfig& config) {
  const std::size_t len = state.current.size();
  const auto vocab = static_cast<std::size_t>(grad.cols());
  if (static_cast<std::size_t>(grad.rows()) != len) {
    throw Error(ErrorKind::kInvalidArgument, "gcg: gradient rows != sequence length");
  }
  const double target = config.objective == Objective::kMaximize
                            ? std::abs(config.target)
                            : -std::abs(config.target);
  // d loss / d x = 2 (s - target) d s / d x
  const double dloss_dscore = 2.0 * (state.current_score - target);
  const std::uint64_t fp = sequence_fingerprint(state.current);

  std::vector<GcgCandidate> pooled;
  std::vector<GcgCandidate> row;
  for (std::size_t pos = 0; pos < len; ++pos) {
    const TokenId cur = state.current[pos];
    const std::uint64_t fp_without = fp - position_hash(pos, cur);
    row.clear();
    for (std::size_t v = 0; v < vocab; ++v) {
      const auto tok = static_cast<TokenId>(v);
      if (tok == cur) continue;
      if (config.history_on &&
          state.visited.count(fp_without + position_hash(pos, tok))) {
        continue;
      }
      const double priority =
          -dloss_dscore * grad(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(v));
      row.push_back({pos, tok, priority});
    }
    const std::size_t keep = std::min(config.top_k, row.size());
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(keep),
                      row.end(), ranks_before);
    pooled.insert(pooled.end(), row.begin(),
                  row.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  if (pooled.empty()) {
    throw Error(ErrorKind::kExhausted, "gcg: every single-swap neighbour was visited");
  }
  std::sort(pooled.begin(), pooled.end(), ranks_before);
  if (pooled.size() > config.eval_budget) pooled.resize(config.eval_budget);
  return pooled;
}

namespace {

// Leaves state untouched when candidate proposal throws.
void step_in_place(GcgState& state, const PromptSpec& prompt, const Scorer& scorer,
                   const GcgConfig& config) {
  const Eigen::MatrixXd grad = scorer.grad_onehot(prompt, state.current);
  const auto cands = propose_candidates(state, grad, config);

  std::vector<std::vector<TokenId>> seqs(cands.size(), state.current);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    seqs[c][cands[c].position] = cands[c].token;
  }
  std::vector<double> scores(cands.size());
  parallel_for(cands.size(), config.workers,
               [&](std::size_t c) { scores[c] = scorer.score(prompt, seqs[c]); });

  // Greedy move to the lowest-loss candidate; earlier rank wins ties.
  std::size_t chosen = 0;
  double chosen_loss = gcg_loss(scores[0], config);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const double loss = gcg_loss(scores[c], config);
    if (loss < chosen_loss) {
      chosen = c;
      chosen_loss = loss;
    }
    if (better(scores[c], state.best_score, config.objective)) {
      state.best = seqs[c];
      state.best_score = scores[c];
    }
  }

  ++state.iteration;
  state.current = std::move(seqs[chosen]);
  state.current_score = scores[chosen];
  state.visited.insert(sequence_fingerprint(state.current));
  state.trace.push_back(
      {state.iteration, state.current_score, state.best_score, cands.size()});
}

}  // namespace

GcgState gcg_step(GcgState state, const PromptSpec& prompt, const Scorer& scorer,
                  const GcgConfig& config) {
  step_in_place(state, prompt, scorer, config);
  return state;
}

GcgResult gcg_search(const PromptSpec& prompt, std::span<const TokenId> start,
                     const Scorer& scorer, const GcgConfig& config) {
  GcgState state = gcg_init(prompt, start, scorer, config);
  GcgResult result;
  result.accepted.push_back(state.current);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    try {
      step_in_place(state, prompt, scorer, config);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kExhausted) throw;
      result.exhausted = true;
      break;
    }
    result.accepted.push_back(state.current);
  }
  result.best = state.best;
  result.best_score = state.best_score;
  result.trace = std::move(state.trace);
  return result;
}

std::vector<TokenId> seeded_start(const GcgConfig& config, std::size_t vocab_size) {
  std::vector<TokenId> start(config.seq_len);
  for (std::size_t i = 0; i < config.seq_len; ++i) {
    start[i] = static_cast<TokenId>(counter_hash(config.seed, kStartStream, i) %
                                    vocab_size);
  }
  return start;
}

}  // namespace rmscope
