#include "rmscope/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rmscope/error.hpp"

namespace rmscope {

using nlohmann::json;
using nlohmann::ordered_json;

std::string key_to_string(const Key& key) {
  if (const auto* id = std::get_if<TokenId>(&key)) return std::to_string(*id);
  return std::get<std::string>(key);
}

Vocabulary::Vocabulary(std::string family_id, std::vector<TokenEntry> entries)
    : family_id_(std::move(family_id)), entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw Error(ErrorKind::kEmptyVocabulary,
                "vocabulary '" + family_id_ + "' has no entries");
  }
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.token_id < 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "negative token id " + std::to_string(e.token_id), e.token_id);
    }
    if (e.text.empty() && !e.is_control) {
      throw Error(ErrorKind::kInvalidArgument,
                  "empty text on non-control token " + std::to_string(e.token_id),
                  e.token_id);
    }
    if (!index_.emplace(e.token_id, i).second) {
      throw Error(ErrorKind::kDuplicateKey,
                  "duplicate token id " + std::to_string(e.token_id), e.token_id);
    }
  }
}

const TokenEntry* Vocabulary::find(TokenId id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

ScoreTable::ScoreTable(std::string model_id, std::string prompt_id,
                       std::vector<ScoreEntry> entries)
    : model_id_(std::move(model_id)),
      prompt_id_(std::move(prompt_id)),
      entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!std::isfinite(e.score)) {
      throw Error(ErrorKind::kNonFiniteScore,
                  "non-finite score for key " + key_to_string(e.key));
    }
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const ScoreEntry& a, const ScoreEntry& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].key == entries_[i - 1].key) {
      throw Error(ErrorKind::kDuplicateKey,
                  "duplicate key " + key_to_string(entries_[i].key));
    }
    if (entries_[i].key.index() != entries_[0].key.index()) {
      throw Error(ErrorKind::kInconsistentHeader,
                  "table mixes token_id and item_id keys");
    }
  }
}

const ScoreEntry* ScoreTable::find(const Key& key) const {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), key,
      [](const ScoreEntry& e, const Key& k) { return e.key < k; });
  if (it == entries_.end() || it->key != key) return nullptr;
  return &*it;
}

std::vector<double> ScoreTable::scores() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.score);
  return out;
}

namespace {

std::size_t key_mismatch_count(const ScoreTable& table, const Vocabulary& vocab) {
  std::size_t hits = 0;
  std::size_t foreign = 0;
  for (const auto& e : table.entries()) {
    const auto* id = std::get_if<TokenId>(&e.key);
    if (id && vocab.find(*id)) {
      ++hits;
    } else {
      ++foreign;
    }
  }
  return foreign + (vocab.size() - hits);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  return in;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

const std::regex& nonfinite_score_pattern() {
  static const std::regex re(R"("score"\s*:\s*-?(NaN|Infinity|inf|nan))");
  return re;
}

}  // namespace

bool is_exhaustive(const ScoreTable& table, const Vocabulary& vocab) {
  return key_mismatch_count(table, vocab) == 0;
}

void require_exhaustive(const ScoreTable& table, const Vocabulary& vocab) {
  const std::size_t n = key_mismatch_count(table, vocab);
  if (n != 0) {
    throw Error(ErrorKind::kKeyMismatch,
                "table " + table.model_id() + "/" + table.prompt_id() +
                    " is not exhaustive over vocabulary '" + vocab.family_id() +
                    "' (" + std::to_string(n) + " keys differ)",
                static_cast<std::int64_t>(n));
  }
}

LoadedDump load_score_dump(const std::filesystem::path& path) {
  auto in = open_input(path);
  LoadedDump out;
  std::vector<ScoreEntry> entries;
  std::optional<std::string> model_id;
  std::optional<std::string> prompt_id;
  std::set<Key> seen;

  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line) || line.front() == '#') continue;
    const auto where = path.string() + ":" + std::to_string(line_no);

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      if (std::regex_search(line, nonfinite_score_pattern())) {
        throw Error(ErrorKind::kNonFiniteScore, "non-finite score at " + where,
                    line_no);
      }
      throw Error(ErrorKind::kParseError, where + ": " + e.what(), line_no);
    }

    ScoreEntry entry;
    std::string rec_model;
    std::string rec_prompt;
    try {
      if (!rec.is_object()) throw std::runtime_error("record is not an object");
      rec_model = rec.at("model_id").get<std::string>();
      rec_prompt = rec.at("prompt_id").get<std::string>();
      const bool has_token = rec.contains("token_id");
      const bool has_item = rec.contains("item_id");
      if (has_token == has_item) {
        throw std::runtime_error("exactly one of token_id / item_id required");
      }
      if (has_token) {
        entry.key = rec.at("token_id").get<TokenId>();
      } else {
        entry.key = rec.at("item_id").get<std::string>();
      }
      if (rec.contains("token_text")) {
        entry.text = rec.at("token_text").get<std::string>();
      }
      const auto& s = rec.at("score");
      if (!s.is_number()) throw std::runtime_error("score is not a number");
      entry.score = s.get<double>();
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kParseError, where + ": " + e.what(), line_no);
    }

    if (!std::isfinite(entry.score)) {
      throw Error(ErrorKind::kNonFiniteScore, "non-finite score at " + where,
                  line_no);
    }
    if (!model_id) {
      model_id = rec_model;
      prompt_id = rec_prompt;
    } else if (*model_id != rec_model || *prompt_id != rec_prompt) {
      throw Error(ErrorKind::kInconsistentHeader,
                  where + ": expected " + *model_id + "/" + *prompt_id +
                      ", got " + rec_model + "/" + rec_prompt,
                  line_no);
    }
    if (!entries.empty() && entries.front().key.index() != entry.key.index()) {
      throw Error(ErrorKind::kInconsistentHeader,
                  where + ": dump mixes token_id and item_id records", line_no);
    }
    if (!seen.insert(entry.key).second) {
      throw Error(ErrorKind::kDuplicateKey,
                  where + ": duplicate key " + key_to_string(entry.key), line_no);
    }
    entries.push_back(std::move(entry));
  }

  if (entries.empty()) out.warnings.push_back(path.string() + ": empty score dump");
  out.table = ScoreTable(model_id.value_or(""), prompt_id.value_or(""),
                         std::move(entries));
  return out;
}

void save_score_dump(const ScoreTable& table, const std::filesystem::path& path,
                     std::span<const std::string> header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  for (const auto& h : header) out << "# " << h << '\n';
  std::string buf;
  for (const auto& e : table.entries()) {
    ordered_json rec;
    rec["model_id"] = table.model_id();
    rec["prompt_id"] = table.prompt_id();
    if (const auto* id = std::get_if<TokenId>(&e.key)) {
      rec["token_id"] = *id;
    } else {
      rec["item_id"] = std::get<std::string>(e.key);
    }
    rec["token_text"] = e.text;
    rec["score"] = e.score;
    try {
      buf = rec.dump();
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::kInvalidArgument,
                  "cannot serialize key " + key_to_string(e.key) + ": " + ex.what());
    }
    out << buf << '\n';
  }
  if (!out) throw Error(ErrorKind::kIoError, "write failed for " + path.string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<TokenEntry> entries;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      const auto rec = json::parse(line);
      TokenEntry e;
      e.token_id = rec.at("token_id").get<TokenId>();
      e.text = rec.at("text").get<std::string>();
      e.is_control = rec.value("is_control", false);
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::kParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + ex.what(),
                  line_no);
    }
  }
  return Vocabulary(path.stem().string(), std::move(entries));
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  for (const auto& e : vocab.entries()) {
    ordered_json rec;
    rec["token_id"] = e.token_id;
    rec["text"] = e.text;
    rec["is_control"] = e.is_control;
    out << rec.dump() << '\n';
  }
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<ModelMeta> load_model_meta(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_array()) {
    throw Error(ErrorKind::kParseError, path.string() + ": expected a JSON array");
  }
  std::vector<ModelMeta> metas;
  std::set<std::string> ids;
  for (const auto& rec : doc) {
    ModelMeta m;
    try {
      m.model_id = rec.at("model_id").get<std::string>();
      m.developer = rec.at("developer").get<std::string>();
      m.base_model = rec.at("base_model").get<std::string>();
      m.params_billions = rec.at("params_billions").get<double>();
      m.rewardbench_rank = rec.at("rewardbench_rank").get<int>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
    }
    if (!(m.params_billions > 0.0) || m.rewardbench_rank < 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "model '" + m.model_id + "': params must be > 0 and rank >= 1");
    }
    if (!ids.insert(m.model_id).second) {
      throw Error(ErrorKind::kDuplicateKey, "duplicate model_id " + m.model_id);
    }
    metas.push_back(std::move(m));
  }
  return metas;
}

Framing parse_framing(const std::string& s) {
  if (s == "positive") return Framing::kPositive;
  if (s == "negative") return Framing::kNegative;
  if (s == "neutral") return Framing::kNeutral;
  throw Error(ErrorKind::kParseError, "unknown framing '" + s + "'");
}

std::string to_string(Framing framing) {
  switch (framing) {
    case Framing::kPositive: return "positive";
    case Framing::kNegative: return "negative";
    case Framing::kNeutral: return "neutral";
  }
  return "neutral";
}

std::vector<PromptSpec> load_prompts(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  const json& arr = doc.is_array() ? doc : doc.value("prompts", json::array());
  std::vector<PromptSpec> prompts;
  std::set<std::string> ids;
  for (const auto& rec : arr) {
    PromptSpec p;
    try {
      p.prompt_id = rec.at("prompt_id").get<std::string>();
      p.text = rec.at("text").get<std::string>();
      // framing must be declared, never inferred from the text
      p.framing = parse_framing(rec.at("framing").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
    }
    if (p.text.empty()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "prompt '" + p.prompt_id + "' has empty text");
    }
    if (!ids.insert(p.prompt_id).second) {
      throw Error(ErrorKind::kDuplicateKey, "duplicate prompt_id " + p.prompt_id);
    }
    prompts.push_back(std::move(p));
  }
  if (prompts.empty()) {
    throw Error(ErrorKind::kInvalidArgument, path.string() + ": no prompts");
  }
  return prompts;
}

AlignedScores shared_token_join(std::span<const ScoreTable> tables,
                                std::span<const Vocabulary> vocabs) {
  if (tables.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "shared_token_join needs >= 2 tables");
  }
  if (tables.size() != vocabs.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "shared_token_join needs one vocabulary per table");
  }
  const std::size_t m = tables.size();

  // text -> ids, per vocabulary
  std::vector<std::map<std::string, std::vector<TokenId>>> by_text(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (vocabs[j].size() == 0) {
      throw Error(ErrorKind::kEmptyVocabulary, "vocabulary " + std::to_string(j));
    }
    require_exhaustive(tables[j], vocabs[j]);
    for (const auto& e : vocabs[j].entries()) by_text[j][e.text].push_back(e.token_id);
  }

  AlignedScores out;
  for (const auto& t : tables) out.model_ids.push_back(t.model_id());

  // Ambiguity only matters for texts that would become rows.
  for (const auto& [text, ids0] : by_text[0]) {
    bool shared = true;
    for (std::size_t j = 1; j < m && shared; ++j) shared = by_text[j].count(text) > 0;
    if (!shared) continue;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& ids = by_text[j].at(text);
      if (ids.size() > 1) {
        std::string list;
        for (auto id : ids) list += (list.empty() ? "" : ",") + std::to_string(id);
        throw Error(ErrorKind::kAmbiguousText,
                    "text '" + text + "' maps to ids {" + list + "} in vocabulary '" +
                        vocabs[j].family_id() + "'");
      }
    }
    out.row_texts.push_back(text);
  }

  const auto rows = static_cast<Eigen::Index>(out.row_texts.size());
  out.values.resize(rows, static_cast<Eigen::Index>(m));
  out.row_keys.assign(out.row_texts.size(), std::vector<Key>(m));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& text = out.row_texts[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < m; ++j) {
      const Key key = by_text[j].at(text).front();
      out.row_keys[static_cast<std::size_t>(r)][j] = key;
      out.values(r, static_cast<Eigen::Index>(j)) = tables[j].find(key)->score;
    }
  }
  return out;
}

AlignedScores shared_key_join(std::span<const ScoreTable> tables) {
  if (tables.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "shared_key_join needs >= 2 tables");
  }
  AlignedScores out;
  for (const auto& t : tables) out.model_ids.push_back(t.model_id());

  std::vector<const ScoreEntry*> firsts;
  for (const auto& e : tables[0].entries()) {
    bool shared = true;
    for (std::size_t j = 1; j < tables.size() && shared; ++j) {
      shared = tables[j].find(e.key) != nullptr;
    }
    if (shared) firsts.push_back(&e);
  }
  const auto rows = static_cast<Eigen::Index>(firsts.size());
  out.values.resize(rows, static_cast<Eigen::Index>(tables.size()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto* e = firsts[static_cast<std::size_t>(r)];
    out.row_texts.push_back(e->text.empty() ? key_to_string(e->key) : e->text);
    out.row_keys.emplace_back(tables.size(), e->key);
    for (std::size_t j = 0; j < tables.size(); ++j) {
      out.values(r, static_cast<Eigen::Index>(j)) = tables[j].find(e->key)->score;
    }
  }
  return out;
}

}  // namespace rmscope
