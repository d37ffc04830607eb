#include "rmscope/toyrm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rmscope/error.hpp"
#include "rmscope/parallel.hpp"

namespace rmscope {

namespace {

constexpr std::uint64_t kStreamEmbed = 1;
constexpr std::uint64_t kStreamMix = 2;
constexpr std::uint64_t kStreamProject = 3;
constexpr std::uint64_t kStreamPrompt = 4;
constexpr std::size_t kMaxSequence = 64;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_tokens(std::size_t vocab_size, std::span<const TokenId> tokens) {
  if (tokens.empty() || tokens.size() > kMaxSequence) {
    throw Error(ErrorKind::kInvalidArgument,
                "sequence length must be in [1, 64], got " +
                    std::to_string(tokens.size()));
  }
  for (TokenId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
      throw Error(ErrorKind::kTokenOutOfRange,
                  "token " + std::to_string(t) + " outside vocabulary of size " +
                      std::to_string(vocab_size),
                  t);
    }
  }
}

struct Forward {
  std::vector<double> z;  // pre-activation W h + p
  double score = 0.0;
};

Forward forward(const ToyModelParams& params, const PromptSpec& prompt,
                std::span<const TokenId> tokens) {
  check_tokens(params.vocab_size, tokens);
  const std::size_t dim = params.embed_dim;

  // Summing in id order makes the pooled vector bit-identical under any
  // permutation of the sequence.
  std::vector<TokenId> sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> h(dim, 0.0);
  for (TokenId t : sorted) {
    const auto e = params.embedding(t);
    for (std::size_t d = 0; d < dim; ++d) h[d] += e[d];
  }
  const double inv_len = 1.0 / static_cast<double>(tokens.size());
  for (auto& v : h) v *= inv_len;

  Forward out;
  out.z = prompt_vector(params, prompt);
  for (std::size_t r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += params.mix(r, c) * h[c];
    out.z[r] += acc;
  }
  for (std::size_t r = 0; r < dim; ++r) {
    out.score += params.projection[r] * std::tanh(out.z[r]);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd Scorer::grad_onehot(const PromptSpec&,
                                    std::span<const TokenId>) const {
  throw Error(ErrorKind::kGradientUnavailable,
              "scorer does not expose one-hot gradients");
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index) {
  return splitmix(splitmix(seed ^ splitmix(stream)) ^ index);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  const std::uint64_t bits = counter_hash(seed, stream, index) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53 * 2.0 - 1.0;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ToyModelParams ToyModelParams::make(std::size_t vocab_size, std::size_t embed_dim,
                                    std::uint64_t seed) {
  if (vocab_size == 0 || embed_dim == 0) {
    throw Error(ErrorKind::kInvalidArgument, "toy model: sizes must be positive");
  }
  ToyModelParams p;
  p.vocab_size = vocab_size;
  p.embed_dim = embed_dim;
  p.seed = seed;
  p.embeddings.resize(vocab_size * embed_dim);
  for (std::size_t i = 0; i < p.embeddings.size(); ++i) {
    p.embeddings[i] = counter_uniform(seed, kStreamEmbed, i);
  }
  // Unit-variance pre-activations: var(h_c) = 1/3, so entries of W span
  // [-3/sqrt(D), 3/sqrt(D)).
  const double scale = 3.0 / std::sqrt(static_cast<double>(embed_dim));
  p.mixing.resize(embed_dim * embed_dim);
  for (std::size_t i = 0; i < p.mixing.size(); ++i) {
    p.mixing[i] = scale * counter_uniform(seed, kStreamMix, i);
  }
  p.projection.resize(embed_dim);
  for (std::size_t i = 0; i < embed_dim; ++i) {
    p.projection[i] = counter_uniform(seed, kStreamProject, i);
  }
  return p;
}

std::vector<double> prompt_vector(const ToyModelParams& params,
                                  const PromptSpec& prompt) {
  const std::uint64_t key = params.seed ^ fnv1a64(prompt.text);
  std::vector<double> p(params.embed_dim);
  for (std::size_t d = 0; d < params.embed_dim; ++d) {
    p[d] = 0.5 * counter_uniform(key, kStreamPrompt, d);
  }
  return p;
}

double toy_score(const ToyModelParams& params, const PromptSpec& prompt,
                 std::span<const TokenId> tokens) {
  return forward(params, prompt, tokens).score;
}

Eigen::MatrixXd toy_grad_onehot(const ToyModelParams& params,
                                const PromptSpec& prompt,
                                std::span<const TokenId> tokens) {
  const Forward fw = forward(params, prompt, tokens);
  const std::size_t dim = params.embed_dim;

  // d score / d h = W^T (u * (1 - tanh^2 z))
  std::vector<double> a(dim);
  for (std::size_t r = 0; r < dim; ++r) {
    const double th = std::tanh(fw.z[r]);
    a[r] = params.projection[r] * (1.0 - th * th);
  }
  std::vector<double> dh(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) dh[c] += params.mix(r, c) * a[r];

  const double inv_len = 1.0 / static_cast<double>(tokens.size());
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(params.vocab_size));
  for (std::size_t v = 0; v < params.vocab_size; ++v) {
    const auto e = params.embedding(static_cast<TokenId>(v));
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += e[c] * dh[c];
    row(static_cast<Eigen::Index>(v)) = acc * inv_len;
  }
  // Mean pooling: every position sees the same gradient row.
  return row.replicate(static_cast<Eigen::Index>(tokens.size()), 1);
}

ToyScorer::ToyScorer(std::shared_ptr<const ToyModelParams> params)
    : params_(std::move(params)) {}

double ToyScorer::score(const PromptSpec& prompt,
                        std::span<const TokenId> tokens) const {
  return toy_score(*params_, prompt, tokens);
}

Eigen::MatrixXd ToyScorer::grad_onehot(const PromptSpec& prompt,
                                       std::span<const TokenId> tokens) const {
  return toy_grad_onehot(*params_, prompt, tokens);
}

PlantedScorer::PlantedScorer(std::shared_ptr<const ToyModelParams> params,
                             PlantedEffectSpec spec, const Vocabulary& vocab,
                             const SentimentLexicon& lexicon,
                             const FrequencyTable* freq)
    : base_(std::move(params)), spec_(spec) {
  if (spec_.frame_sign && *spec_.frame_sign != 1 && *spec_.frame_sign != -1) {
    throw Error(ErrorKind::kInvalidArgument, "planted: frame_sign must be +1 or -1");
  }
  const std::size_t v_size = base_.vocab_size();
  offsets_pos_.assign(v_size, 0.0);
  offsets_neg_.assign(v_size, 0.0);
  for (const auto& tok : vocab.entries()) {
    if (tok.token_id < 0 || static_cast<std::size_t>(tok.token_id) >= v_size) {
      throw Error(ErrorKind::kTokenOutOfRange,
                  "vocabulary token " + std::to_string(tok.token_id) +
                      " exceeds the toy model's vocab_size",
                  tok.token_id);
    }
    const auto word = normalize_token(tok.text);
    if (!word) continue;
    const double valence = lexicon.valence(*word).value_or(0);
    const double log_freq = freq ? freq->log_frequency(*word).value_or(0.0) : 0.0;
    for (int sign : {1, -1}) {
      double off = sign * spec_.sentiment_gain * valence +
                   spec_.frequency_gain * log_freq;
      if (valence * sign > 0) off += sign * spec_.aligned_gain * valence;
      (sign > 0 ? offsets_pos_ : offsets_neg_)[static_cast<std::size_t>(tok.token_id)] = off;
    }
  }
}

int PlantedScorer::sign_for(const PromptSpec& prompt) const {
  if (spec_.frame_sign) return *spec_.frame_sign;
  return prompt.framing == Framing::kNegative ? -1 : 1;
}

const std::vector<double>& PlantedScorer::offsets_for(const PromptSpec& prompt) const {
  return sign_for(prompt) > 0 ? offsets_pos_ : offsets_neg_;
}

double PlantedScorer::offset(const PromptSpec& prompt, TokenId id) const {
  return offsets_for(prompt).at(static_cast<std::size_t>(id));
}

double PlantedScorer::score(const PromptSpec& prompt,
                            std::span<const TokenId> tokens) const {
  const double base = base_.score(prompt, tokens);
  const auto& off = offsets_for(prompt);
  if (tokens.size() == 1) return base + off[static_cast<std::size_t>(tokens[0])];
  std::vector<TokenId> sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (TokenId t : sorted) acc += off[static_cast<std::size_t>(t)];
  return base + acc / static_cast<double>(tokens.size());
}

Eigen::MatrixXd PlantedScorer::grad_onehot(const PromptSpec& prompt,
                                           std::span<const TokenId> tokens) const {
  Eigen::MatrixXd g = base_.grad_onehot(prompt, tokens);
  const auto& off = offsets_for(prompt);
  const double inv_len = 1.0 / static_cast<double>(tokens.size());
  const Eigen::Map<const Eigen::RowVectorXd> row(off.data(),
                                                 static_cast<Eigen::Index>(off.size()));
  g.rowwise() += row * inv_len;
  return g;
}

namespace {

Error with_token(const Error& e, const std::string& what) {
  return Error(e.kind(), what + ": " + e.what(), e.detail());
}

}  // namespace

ScoreTable exhaustive_score(const Scorer& scorer, const PromptSpec& prompt,
                            const Vocabulary& vocab, const std::string& model_id,
                            std::size_t workers) {
  const auto& toks = vocab.entries();
  std::vector<double> slots(toks.size());
  try {
    parallel_for(toks.size(), workers, [&](std::size_t i) {
      const TokenId id = toks[i].token_id;
      try {
        slots[i] = scorer.score(prompt, std::span<const TokenId>(&id, 1));
      } catch (const Error& e) {
        throw Error(e.kind(), "token " + std::to_string(id) + ": " + e.what(), id);
      }
      if (!std::isfinite(slots[i])) {
        throw Error(ErrorKind::kNonFiniteScore,
                    "token " + std::to_string(id) + " scored non-finite", id);
      }
    });
  } catch (const Error& e) {
    throw with_token(e, "exhaustive_score(" + model_id + "/" + prompt.prompt_id + ")");
  }
  std::vector<ScoreEntry> entries;
  entries.reserve(toks.size());
  for (std::size_t i = 0; i < toks.size(); ++i) {
    entries.push_back({toks[i].token_id, toks[i].text, slots[i]});
  }
  return ScoreTable(model_id, prompt.prompt_id, std::move(entries));
}

std::vector<ItemSpec> load_items(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<ItemSpec> items;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      ItemSpec item;
      item.item_id = rec.at("item_id").get<std::string>();
      item.tokens = rec.at("tokens").get<std::vector<TokenId>>();
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
  }
  if (items.empty()) throw Error(ErrorKind::kInvalidArgument, "empty item list");
  return items;
}

ScoreTable score_items(const Scorer& scorer, const PromptSpec& prompt,
                       std::span<const ItemSpec> items, const std::string& model_id,
                       std::size_t workers) {
  std::vector<double> slots(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    try {
      slots[i] = scorer.score(prompt, items[i].tokens);
    } catch (const Error& e) {
      throw Error(e.kind(), "item '" + items[i].item_id + "': " + e.what(), e.detail());
    }
  });
  std::vector<ScoreEntry> entries;
  for (std::size_t i = 0; i < items.size(); ++i) {
    entries.push_back({items[i].item_id, items[i].item_id, slots[i]});
  }
  return ScoreTable(model_id, prompt.prompt_id, std::move(entries));
}

ToySpec load_toy_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  ToySpec spec;
  try {
    const auto doc = nlohmann::json::parse(in);
    spec.model_id = doc.value("model_id", std::string("toy"));
    spec.vocab_size = doc.at("vocab_size").get<std::size_t>();
    spec.embed_dim = doc.value("embed_dim", std::size_t{64});
    spec.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("planted")) {
      const auto& pj = doc.at("planted");
      ToySpec::Planted planted;
      planted.effect.sentiment_gain = pj.value("sentiment_gain", 0.0);
      planted.effect.frequency_gain = pj.value("frequency_gain", 0.0);
      planted.effect.aligned_gain = pj.value("aligned_gain", 0.0);
      if (pj.contains("frame_sign")) {
        const auto& fs = pj.at("frame_sign");
        if (fs.is_string()) {
          if (fs.get<std::string>() != "prompt") {
            throw Error(ErrorKind::kParseError,
                        "frame_sign must be +1, -1 or \"prompt\"");
          }
        } else {
          planted.effect.frame_sign = fs.get<int>();
        }
      } else {
        planted.effect.frame_sign = 1;
      }
      planted.lexicon_kind = pj.value("lexicon_kind", std::string("afinn"));
      planted.lexicon = resolve(pj.at("lexicon").get<std::string>());
      if (planted.lexicon_kind == "bing") {
        planted.lexicon_negative = resolve(pj.at("lexicon_negative").get<std::string>());
      }
      if (pj.contains("frequency")) {
        planted.frequency = resolve(pj.at("frequency").get<std::string>());
      }
      spec.planted = std::move(planted);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
  if (spec.vocab_size == 0 || spec.embed_dim == 0) {
    throw Error(ErrorKind::kInvalidArgument, path.string() + ": sizes must be positive");
  }
  return spec;
}

std::unique_ptr<Scorer> make_scorer(const ToySpec& spec, const Vocabulary* vocab) {
  auto params = std::make_shared<const ToyModelParams>(
      ToyModelParams::make(spec.vocab_size, spec.embed_dim, spec.seed));
  if (!spec.planted) return std::make_unique<ToyScorer>(std::move(params));

  if (!vocab) {
    throw Error(ErrorKind::kInvalidArgument, "planted toy model needs a vocabulary");
  }
  const auto& pl = *spec.planted;
  SentimentLexicon lexicon = pl.lexicon_kind == "bing"
                                 ? load_bing(pl.lexicon, pl.lexicon_negative)
                                 : load_afinn(pl.lexicon);
  std::optional<FrequencyTable> freq;
  if (pl.frequency) freq = load_frequency(*pl.frequency);
  return std::make_unique<PlantedScorer>(std::move(params), pl.effect, *vocab, lexicon,
                                         freq ? &*freq : nullptr);
}

}  // namespace rmscope
