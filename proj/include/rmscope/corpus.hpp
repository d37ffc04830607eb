#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace rmscope {

using TokenId = std::int64_t;

// A score-table key: a tokenizer id, or an item name for item-level dumps.
using Key = std::variant<TokenId, std::string>;

std::string key_to_string(const Key& key);

struct TokenEntry {
  TokenId token_id = 0;
  std::string text;  // decoded form, leading whitespace preserved
  bool is_control = false;
};

class Vocabulary {
 public:
  Vocabulary(std::string family_id, std::vector<TokenEntry> entries);

  const std::string& family_id() const { return family_id_; }
  const std::vector<TokenEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const TokenEntry* find(TokenId id) const;

 private:
  std::string family_id_;
  std::vector<TokenEntry> entries_;
  std::unordered_map<TokenId, std::size_t> index_;
};

struct ModelMeta {
  std::string model_id;
  std::string developer;
  std::string base_model;
  double params_billions = 0.0;
  int rewardbench_rank = 0;
};

enum class Framing { kPositive, kNegative, kNeutral };

struct PromptSpec {
  std::string prompt_id;
  std::string text;
  Framing framing = Framing::kNeutral;
};

struct ScoreEntry {
  Key key;
  std::string text;
  double score = 0.0;
};

// Exhaustive reward scores for one (model, prompt). Entries are held sorted by
// key ascending and are immutable after construction.
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(std::string model_id, std::string prompt_id,
             std::vector<ScoreEntry> entries);

  const std::string& model_id() const { return model_id_; }
  const std::string& prompt_id() const { return prompt_id_; }
  const std::vector<ScoreEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const ScoreEntry* find(const Key& key) const;
  std::vector<double> scores() const;

 private:
  std::string model_id_;
  std::string prompt_id_;
  std::vector<ScoreEntry> entries_;
};

// True when the table's key set equals the vocabulary's id set.
bool is_exhaustive(const ScoreTable& table, const Vocabulary& vocab);
// Throws KeyMismatch with the size of the symmetric difference.
void require_exhaustive(const ScoreTable& table, const Vocabulary& vocab);

struct LoadedDump {
  ScoreTable table;
  std::vector<std::string> warnings;
};

// Lines starting with '#' are header comments and are skipped on load.
LoadedDump load_score_dump(const std::filesystem::path& path);
void save_score_dump(const ScoreTable& table, const std::filesystem::path& path,
                     std::span<const std::string> header = {});

Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

std::vector<ModelMeta> load_model_meta(const std::filesystem::path& path);
std::vector<PromptSpec> load_prompts(const std::filesystem::path& path);

Framing parse_framing(const std::string& s);
std::string to_string(Framing framing);

// Scores aligned across models: row r is one shared token, column j one model.
struct AlignedScores {
  std::vector<std::string> model_ids;
  std::vector<std::string> row_texts;
  std::vector<std::vector<Key>> row_keys;  // [row][model]
  Eigen::MatrixXd values;                  // rows x models, column-major

  std::span<const double> column(std::size_t j) const {
    return {values.col(static_cast<Eigen::Index>(j)).data(),
            static_cast<std::size_t>(values.rows())};
  }
};

// Rows are the decoded texts present in every vocabulary (exact match,
// leading whitespace significant), in byte-lexicographic order.
AlignedScores shared_token_join(std::span<const ScoreTable> tables,
                                std::span<const Vocabulary> vocabs);

// Rows are keys present in every table, in key order. Used for item dumps and
// for dumps from a single tokenizer family.
AlignedScores shared_key_join(std::span<const ScoreTable> tables);

}  // namespace rmscope
