#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rmscope/corpus.hpp"
#include "rmscope/lexical.hpp"

namespace rmscope {

// Reward as a function of (prompt, response tokens). Implementations must be
// deterministic and safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual double score(const PromptSpec& prompt,
                       std::span<const TokenId> tokens) const = 0;
  virtual std::size_t vocab_size() const = 0;

  virtual bool has_gradient() const { return false; }
  // d score / d x for the row-stochastic relaxation x (L x V) of the one-hot
  // sequence, evaluated at the sequence itself.
  virtual Eigen::MatrixXd grad_onehot(const PromptSpec& prompt,
                                      std::span<const TokenId> tokens) const;
};

// Splitmix-style counter hash; (seed, stream, index) -> 64 random bits.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index);
// Uniform in [-1, 1) from counter_hash.
double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index);
std::uint64_t fnv1a64(std::string_view bytes);

struct ToyModelParams {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::uint64_t seed = 0;
  std::vector<double> embeddings;  // vocab_size x embed_dim, row-major
  std::vector<double> mixing;      // embed_dim x embed_dim, row-major
  std::vector<double> projection;  // embed_dim

  static ToyModelParams make(std::size_t vocab_size, std::size_t embed_dim,
                             std::uint64_t seed);

  std::span<const double> embedding(TokenId id) const {
    return {embeddings.data() + static_cast<std::size_t>(id) * embed_dim, embed_dim};
  }
  double mix(std::size_t row, std::size_t col) const {
    return mixing[row * embed_dim + col];
  }
};

// Prompt offset p: derived from the seed and the prompt text only.
std::vector<double> prompt_vector(const ToyModelParams& params,
                                  const PromptSpec& prompt);

// u . tanh(W h + p), h = mean embedding of the tokens.
double toy_score(const ToyModelParams& params, const PromptSpec& prompt,
                 std::span<const TokenId> tokens);

Eigen::MatrixXd toy_grad_onehot(const ToyModelParams& params,
                                const PromptSpec& prompt,
                                std::span<const TokenId> tokens);

class ToyScorer : public Scorer {
 public:
  explicit ToyScorer(std::shared_ptr<const ToyModelParams> params);

  double score(const PromptSpec& prompt,
               std::span<const TokenId> tokens) const override;
  std::size_t vocab_size() const override { return params_->vocab_size; }
  bool has_gradient() const override { return true; }
  Eigen::MatrixXd grad_onehot(const PromptSpec& prompt,
                              std::span<const TokenId> tokens) const override;

  const ToyModelParams& params() const { return *params_; }

 private:
  std::shared_ptr<const ToyModelParams> params_;
};

struct PlantedEffectSpec {
  double sentiment_gain = 0.0;
  double frequency_gain = 0.0;
  // Extra valence gain applied only to tokens whose valence sign matches the
  // frame sign, giving the frame-aligned class a steeper slope.
  double aligned_gain = 0.0;
  // +1 / -1, or empty to follow the prompt's declared framing
  // (negative -> -1, otherwise +1).
  std::optional<int> frame_sign;
};

// Toy score plus per-token linear sentiment and log-frequency terms. Single
// tokens carry the planted offset exactly; sequences carry the mean offset.
class PlantedScorer : public Scorer {
 public:
  PlantedScorer(std::shared_ptr<const ToyModelParams> params,
                PlantedEffectSpec spec, const Vocabulary& vocab,
                const SentimentLexicon& lexicon, const FrequencyTable* freq);

  double score(const PromptSpec& prompt,
               std::span<const TokenId> tokens) const override;
  std::size_t vocab_size() const override { return base_.vocab_size(); }
  bool has_gradient() const override { return true; }
  Eigen::MatrixXd grad_onehot(const PromptSpec& prompt,
                              std::span<const TokenId> tokens) const override;

  double offset(const PromptSpec& prompt, TokenId id) const;
  const ToyScorer& base() const { return base_; }

 private:
  int sign_for(const PromptSpec& prompt) const;
  const std::vector<double>& offsets_for(const PromptSpec& prompt) const;

  ToyScorer base_;
  PlantedEffectSpec spec_;
  std::vector<double> offsets_pos_;  // frame sign +1
  std::vector<double> offsets_neg_;  // frame sign -1
};

// Scores every vocabulary entry as a one-token response. Each token writes its
// own slot, so the result does not depend on `workers`.
ScoreTable exhaustive_score(const Scorer& scorer, const PromptSpec& prompt,
                            const Vocabulary& vocab, const std::string& model_id,
                            std::size_t workers = 1);

// Multi-token items (e.g. named concepts) scored as whole responses.
struct ItemSpec {
  std::string item_id;
  std::vector<TokenId> tokens;
};

std::vector<ItemSpec> load_items(const std::filesystem::path& path);

ScoreTable score_items(const Scorer& scorer, const PromptSpec& prompt,
                       std::span<const ItemSpec> items, const std::string& model_id,
                       std::size_t workers = 1);

// Toy model spec file: {model_id?, vocab_size, embed_dim?, seed, planted?}.
struct ToySpec {
  std::string model_id = "toy";
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::uint64_t seed = 0;

  struct Planted {
    PlantedEffectSpec effect;
    std::string lexicon_kind = "afinn";
    std::filesystem::path lexicon;           // AFINN file or Bing positive list
    std::filesystem::path lexicon_negative;  // Bing negative list
    std::optional<std::filesystem::path> frequency;
  };
  std::optional<Planted> planted;
};

ToySpec load_toy_spec(const std::filesystem::path& path);

// Builds the scorer a spec describes. Planted variants need the vocabulary for
// token texts.
std::unique_ptr<Scorer> make_scorer(const ToySpec& spec, const Vocabulary* vocab);

}  // namespace rmscope
