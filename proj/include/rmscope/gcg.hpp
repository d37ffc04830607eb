#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "rmscope/corpus.hpp"
#include "rmscope/toyrm.hpp"

namespace rmscope {

enum class Objective { kMaximize, kMinimize };

Objective parse_objective(const std::string& s);
std::string to_string(Objective objective);

struct GcgConfig {
  std::size_t seq_len = 3;
  std::size_t iterations = 100;
  std::size_t top_k = 16;       // gradient candidates kept per position
  std::size_t eval_budget = 32; // exact evaluations per step
  Objective objective = Objective::kMaximize;
  double target = 1e3;          // magnitude; sign follows the objective
  std::uint64_t seed = 0;
  bool history_on = true;
  std::size_t workers = 1;
};

// JSON object with any of: seq_len, iterations, top_k, eval_budget,
// objective ("maximize" | "minimize"), target, seed, history_on.
GcgConfig load_gcg_config(const std::filesystem::path& path);

// (score - target)^2 with target = +|target| (maximize) or -|target| (minimize).
double gcg_loss(double score, const GcgConfig& config);

// Order-sensitive additive (Zobrist) hash of a token sequence.
std::uint64_t sequence_fingerprint(std::span<const TokenId> tokens);

struct GcgCandidate {
  std::size_t position = 0;
  TokenId token = 0;
  double priority = 0.0;  // first-order loss decrease, -d loss / d x
};

struct GcgTraceRow {
  std::size_t iteration = 0;
  double current_score = 0.0;
  double best_score = 0.0;
  std::size_t evaluations = 0;  // exact scorer calls in this step
};

struct GcgState {
  std::vector<TokenId> current;
  double current_score = 0.0;
  std::vector<TokenId> best;
  double best_score = 0.0;
  std::unordered_set<std::uint64_t> visited;
  std::vector<GcgTraceRow> trace;
  std::size_t iteration = 0;
};

GcgState gcg_init(const PromptSpec& prompt, std::span<const TokenId> start,
                  const Scorer& scorer, const GcgConfig& config);

// Single-swap candidates ranked by gradient. Swaps back to the current token,
// and (with history on) swaps into a visited sequence, are removed before the
// per-position top_k cut. Global order: priority desc, then position, then
// token id. Throws Exhausted when nothing is left.
std::vector<GcgCandidate> propose_candidates(const GcgState& state,
                                             const Eigen::MatrixXd& grad,
                                             const GcgConfig& config);

GcgState gcg_step(GcgState state, const PromptSpec& prompt, const Scorer& scorer,
                  const GcgConfig& config);

struct GcgResult {
  std::vector<TokenId> best;
  double best_score = 0.0;
  std::vector<GcgTraceRow> trace;
  std::vector<std::vector<TokenId>> accepted;  // every current sequence, in order
  bool exhausted = false;
};

GcgResult gcg_search(const PromptSpec& prompt, std::span<const TokenId> start,
                     const Scorer& scorer, const GcgConfig& config);

// Deterministic start sequence drawn from config.seed.
std::vector<TokenId> seeded_start(const GcgConfig& config, std::size_t vocab_size);

}  // namespace rmscope
