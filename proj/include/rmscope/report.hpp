#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "rmscope/rankcorr.hpp"

namespace rmscope {

inline constexpr const char* kToolVersion = "rmscope 0.1.0";

enum class OutputFormat { kCsv, kJson };

OutputFormat parse_format(const std::string& s);

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

// fnv1a64 over the file bytes, 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

struct Provenance {
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // basename, digest

  void add_input(const std::filesystem::path& path);
  // "tool=...", "seed=...", "input=name:digest" lines, without comment marker.
  std::vector<std::string> lines() const;
};

using Cell = std::variant<std::string, double, std::int64_t>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

// CSV: '#'-prefixed provenance lines, header, rows (RFC 4180 quoting).
// JSON: {"provenance": {...}, "columns": [...], "rows": [{...}, ...]}.
void write_table(std::ostream& out, const Table& table, OutputFormat format,
                 const Provenance& provenance);
// Writes to path, or to stdout when path is empty or "-".
void write_table(const std::string& path, const Table& table, OutputFormat format,
                 const Provenance& provenance);

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Skips '#' lines; first remaining line is the header.
CsvData read_csv(const std::filesystem::path& path);

Table correlation_table(const CorrelationMatrix& corr);
CorrelationMatrix read_correlation_csv(const std::filesystem::path& path);

}  // namespace rmscope
