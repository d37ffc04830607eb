#include "rmscope/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <cstdio>
#include <sstream>

#include <json.hpp>
#include "rmscope/error.hpp"
#include "rmscope/toyrm.hpp"

namespace rmscope {

namespace {

using ordered_json = nlohmann::ordered_json;

bool needs_quotes(const std::string& s) {
  if (s.empty()) return false;
  if (s.front() == '#' || s.front() == ' ' || s.back() == ' ') return true;
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string csv_field(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::to_string(std::get<std::int64_t>(c));
}

ordered_json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return format_double(*d);
  }
  return std::get<std::int64_t>(c);
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kParseError, "not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "json") return OutputFormat::kJson;
  throw Error(ErrorKind::kInvalidArgument, "unknown format '" + s + "'");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return {buf, ptr};
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void Provenance::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.filename().string(), file_digest(path));
}

std::vector<std::string> Provenance::lines() const {
  std::vector<std::string> out;
  out.push_back(std::string("tool=") + kToolVersion);
  out.push_back("seed=" + std::to_string(seed));
  for (const auto& [name, digest] : inputs) out.push_back("input=" + name + ":" + digest);
  return out;
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorKind::kInvalidArgument, "row width != column count");
  }
  rows.push_back(std::move(row));
}

void write_table(std::ostream& out, const Table& table, OutputFormat format,
                 const Provenance& provenance) {
  if (format == OutputFormat::kCsv) {
    for (const auto& line : provenance.lines()) out << "# " << line << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << (c ? "," : "") << csv_field(table.columns[c]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << (c ? "," : "") << csv_field(cell_text(row[c]));
      }
      out << '\n';
    }
    return;
  }
  ordered_json doc;
  ordered_json prov;
  prov["tool"] = kToolVersion;
  prov["seed"] = provenance.seed;
  ordered_json inputs = ordered_json::array();
  for (const auto& [name, digest] : provenance.inputs) {
    inputs.push_back({{"name", name}, {"digest", digest}});
  }
  prov["inputs"] = inputs;
  doc["provenance"] = prov;
  doc["columns"] = table.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json obj;
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  out << doc.dump(1) << '\n';
}

void write_table(const std::string& path, const Table& table, OutputFormat format,
                 const Provenance& provenance) {
  if (path.empty() || path == "-") {
    write_table(std::cout, table, format, provenance);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path);
  write_table(out, table, format, provenance);
  if (!out) throw Error(ErrorKind::kIoError, "write failed for " + path);
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), {}};

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool at_record_start = true;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (at_record_start && !in_quotes && c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      ++i;
      continue;
    }
    at_record_start = false;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      at_record_start = true;
    } else {
      field += c;
    }
    ++i;
  }
  if (in_quotes) throw Error(ErrorKind::kParseError, path.string() + ": unterminated quote");
  if (!at_record_start) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  CsvData out;
  if (records.empty()) throw Error(ErrorKind::kParseError, path.string() + ": no header");
  out.header = std::move(records.front());
  out.rows.assign(std::make_move_iterator(records.begin() + 1),
                  std::make_move_iterator(records.end()));
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    if (out.rows[r].size() != out.header.size()) {
      throw Error(ErrorKind::kParseError,
                  path.string() + ": row " + std::to_string(r + 1) + " has " +
                      std::to_string(out.rows[r].size()) + " fields",
                  static_cast<std::int64_t>(r + 1));
    }
  }
  return out;
}

Table correlation_table(const CorrelationMatrix& corr) {
  Table t;
  t.columns.push_back("model_id");
  for (const auto& m : corr.model_ids) t.columns.push_back(m);
  for (std::size_t i = 0; i < corr.model_ids.size(); ++i) {
    std::vector<Cell> row{corr.model_ids[i]};
    for (std::size_t j = 0; j < corr.model_ids.size(); ++j) {
      row.emplace_back(corr.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    t.add_row(std::move(row));
  }
  return t;
}

CorrelationMatrix read_correlation_csv(const std::filesystem::path& path) {
  const auto csv = read_csv(path);
  const std::size_t n = csv.header.size() - 1;
  if (csv.header.empty() || csv.header.front() != "model_id" || csv.rows.size() != n) {
    throw Error(ErrorKind::kParseError, path.string() + ": not a square correlation matrix");
  }
  CorrelationMatrix corr;
  corr.model_ids.assign(csv.header.begin() + 1, csv.header.end());
  corr.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (csv.rows[i][0] != corr.model_ids[i]) {
      throw Error(ErrorKind::kParseError, path.string() + ": row/column labels differ");
    }
    for (std::size_t j = 0; j < n; ++j) {
      corr.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_double(csv.rows[i][j + 1]);
    }
  }
  return corr;
}

}  // namespace rmscope
