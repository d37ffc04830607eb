#include "pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rmscope/cli.hpp"

namespace fs = std::filesystem;

namespace rmscope::harness {

namespace {

void step(const std::string& name, std::vector<std::string> args) {
  args.insert(args.begin(), "rmscope");
  const int code = rmscope::run(args);
  if (code != 0) {
    throw std::runtime_error("pipeline step '" + name + "' exited with " + std::to_string(code));
  }
}

// JSON provenance holds input digests, so it is dropped like CSV '#' lines.
std::vector<std::string> content_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<std::string> out;
  std::string line;
  if (p.extension() == ".json") {
    auto doc = nlohmann::ordered_json::parse(in);
    doc.erase("provenance");
    std::istringstream lines(doc.dump(1));
    while (std::getline(lines, line)) out.push_back(line);
    return out;
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '#') continue;
    out.push_back(line);
  }
  return out;
}

std::set<fs::path> relative_files(const fs::path& root) {
  std::set<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), root));
  }
  return out;
}

const std::regex& number_re() {
  static const std::regex re(R"(-?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  return re;
}

// Splits a line into its non-numeric skeleton and the numbers it contains.
std::pair<std::string, std::vector<double>> split_numbers(const std::string& line) {
  std::string skeleton;
  std::vector<double> nums;
  auto begin = std::sregex_iterator(line.begin(), line.end(), number_re());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    skeleton.append(line, last, static_cast<std::size_t>(it->position()) - last);
    skeleton += '\x01';
    nums.push_back(std::strtod(it->str().c_str(), nullptr));
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  skeleton.append(line, last);
  return {skeleton, nums};
}

}  // namespace

void run_pipeline(const fs::path& fixtures, const fs::path& out, std::size_t workers) {
  fs::create_directories(out);
  const auto fx = [&](const char* name) { return (fixtures / name).string(); };
  const auto o = [&](const std::string& name) { return (out / name).string(); };
  const std::string w = std::to_string(workers);
  const std::string dumps = o("dumps");
  const std::string items = o("items");

  for (const char* m : {"a", "b", "c"}) {
    const std::string spec = fx((std::string("toy_") + m + ".json").c_str());
    step("score", {"score", "--toy-spec", spec, "--prompt", fx("prompts.json"), "--vocab",
                   fx("vocab_a.jsonl"), "--out", dumps, "--workers", w});
    step("score items", {"score", "--toy-spec", spec, "--prompt", fx("item_prompts.json"),
                         "--items", fx("items.jsonl"), "--vocab", fx("vocab_a.jsonl"), "--out",
                         items, "--workers", w});
  }
  for (const char* m : {"d", "e"}) {
    const std::string spec = fx((std::string("toy_") + m + ".json").c_str());
    step("score", {"score", "--toy-spec", spec, "--prompt", fx("prompts.json"), "--vocab",
                   fx("vocab_b.jsonl"), "--out", dumps, "--workers", w});
  }

  const auto dump = [&](const char* model, const char* prompt) {
    return (out / "dumps" / (std::string("toy-") + model + "__" + prompt + ".jsonl")).string();
  };
  std::vector<std::string> greatest;
  for (const char* m : {"a", "b", "c", "d", "e"}) greatest.push_back(dump(m, "greatest"));
  const std::vector<std::string> vocabs{fx("vocab_a.jsonl"), fx("vocab_a.jsonl"),
                                        fx("vocab_a.jsonl"), fx("vocab_b.jsonl"),
                                        fx("vocab_b.jsonl")};
  auto with = [](std::vector<std::string> base, const std::string& flag,
                 const std::vector<std::string>& values) {
    base.push_back(flag);
    base.insert(base.end(), values.begin(), values.end());
    return base;
  };

  step("stats", with(with({"stats", "--out", o("stats.csv"), "--workers", w}, "--dumps",
                          greatest),
                     "--vocab", vocabs));
  step("extremes", {"extremes", "--dump", dump("b", "greatest"), "-k", "5", "--out",
                    o("extremes.csv")});
  step("compare", with(with({"compare", "--out", o("corr.csv"), "--workers", w}, "--dumps",
                            greatest),
                       "--vocab", vocabs));
  step("mds", {"mds", "--corr", o("corr.csv"), "--out", o("mds.csv")});
  step("rsa", {"rsa", "--corr", o("corr.csv"), "--models", fx("toy_models.json"), "--out",
               o("rsa_simple.csv")});
  step("rsa multiple", {"rsa", "--corr", o("corr.csv"), "--models", fx("toy_models.json"),
                        "--mode", "multiple", "--out", o("rsa_multiple.csv")});
  step("stepwise", {"stepwise", "--corr", o("corr.csv"), "--models", fx("toy_models.json"),
                    "--out", o("stepwise.csv")});

  std::vector<std::string> framed;
  for (const char* m : {"a", "b", "c"}) {
    for (const char* p : {"best", "worst"}) framed.push_back(dump(m, p));
  }
  step("sentiment", with({"sentiment", "--vocab", fx("vocab_a.jsonl"), "--afinn",
                          fx("lexicon_afinn.txt"), "--out", o("sentiment.csv"), "--paired-out",
                          o("paired.csv")},
                         "--dumps", framed));
  step("sentiment bing", {"sentiment", "--dumps", dump("e", "best"), dump("e", "worst"),
                          "--vocab", fx("vocab_b.jsonl"), "--bing-positive",
                          fx("bing_positive.txt"), "--bing-negative", fx("bing_negative.txt"),
                          "--out", o("sentiment_bing.csv")});
  step("frequency", {"frequency", "--dumps", dump("c", "greatest"), dump("a", "greatest"),
                     "--vocab", fx("vocab_a.jsonl"), "--afinn", fx("lexicon_afinn.txt"),
                     "--frequency", fx("frequency.csv"), "--out", o("frequency.csv")});
  step("framing", {"framing", "--best", dump("b", "best"), "--worst", dump("b", "worst"),
                   "--out", o("framing.csv"), "--axes-out", o("axes")});
  step("elo-rate", {"elo-rate", "--comparisons", fx("comparisons.csv"), "--out",
                    o("ratings.csv")});
  step("align", {"align", "--ratings", o("ratings.csv"), "--dumps",
                 (out / "items" / "toy-a__concept.jsonl").string(),
                 (out / "items" / "toy-b__concept.jsonl").string(),
                 (out / "items" / "toy-c__concept.jsonl").string(), "--format", "json",
                 "--out", o("align.json"), "--discrepancies-out", o("discrepancies.json")});
  step("gcg", {"gcg", "--toy-spec", fx("toy_b.json"), "--prompt", fx("prompts.json"),
               "--vocab", fx("vocab_a.jsonl"), "--config", fx("gcg.json"), "--seed", "7",
               "--workers", w, "--out", o("gcg_trace.csv"), "--best-out", o("gcg_best.csv")});
  step("gcg minimize", {"gcg", "--toy-spec", fx("toy_b.json"), "--prompt", fx("prompts.json"),
                        "--prompt-id", "worst", "--vocab", fx("vocab_a.jsonl"), "--config",
                        fx("gcg.json"), "--objective", "minimize", "--seed", "8", "--workers", w,
                        "--out", o("gcg_min_trace.csv"), "--best-out", o("gcg_min_best.csv")});
}

std::vector<std::string> compare_trees(const fs::path& golden, const fs::path& actual,
                                       double rel_tol) {
  std::vector<std::string> diffs;
  const auto want = relative_files(golden);
  const auto got = relative_files(actual);
  if (want.empty()) diffs.push_back("no golden files under " + golden.string());
  for (const auto& f : got) {
    if (!want.count(f)) diffs.push_back(f.string() + ": not in golden set");
  }
  for (const auto& f : want) {
    if (!got.count(f)) {
      diffs.push_back(f.string() + ": missing from output");
      continue;
    }
    const auto a = content_lines(golden / f);
    const auto b = content_lines(actual / f);
    if (a.size() != b.size()) {
      diffs.push_back(f.string() + ": " + std::to_string(b.size()) + " lines, golden has " +
                      std::to_string(a.size()));
      continue;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == b[i]) continue;
      const auto [sa, na] = split_numbers(a[i]);
      const auto [sb, nb] = split_numbers(b[i]);
      bool same = sa == sb && na.size() == nb.size();
      for (std::size_t k = 0; same && k < na.size(); ++k) {
        const double scale = std::max({1.0, std::abs(na[k]), std::abs(nb[k])});
        same = std::abs(na[k] - nb[k]) <= rel_tol * scale;
      }
      if (!same) {
        diffs.push_back(f.string() + ":" + std::to_string(i + 1) + ": '" + b[i] +
                        "' != golden '" + a[i] + "'");
        break;
      }
    }
  }
  return diffs;
}

void update_golden(const fs::path& golden, const fs::path& actual) {
  fs::remove_all(golden);
  fs::create_directories(golden);
  fs::copy(actual, golden, fs::copy_options::recursive);
}

bool byte_identical_trees(const fs::path& a, const fs::path& b) {
  const auto fa = relative_files(a);
  if (fa != relative_files(b)) return false;
  for (const auto& f : fa) {
    std::ifstream ia(a / f, std::ios::binary);
    std::ifstream ib(b / f, std::ios::binary);
    const std::string sa{std::istreambuf_iterator<char>(ia), {}};
    const std::string sb{std::istreambuf_iterator<char>(ib), {}};
    if (sa != sb) return false;
  }
  return true;
}

}  // namespace rmscope::harness
