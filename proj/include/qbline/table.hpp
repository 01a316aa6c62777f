#pragma once

// Column tables and their CSV / JSON serialization.

#include "qbline/protocols.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qbline {

inline constexpr const char* kVersion = "1.0.0";

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[column][row]
  nlohmann::json meta = nlohmann::json::object();

  explicit Table(std::vector<std::string> names = {});

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  bool empty() const { return rows() == 0; }
  void add_row(const std::vector<double>& row);
  const std::vector<double>& column(std::string_view name) const;
};

enum class Format { Csv, Json };

Format parse_format(const std::string& text);
std::string extension(Format format);

// Header line plus one line per row, 17 significant digits, LF endings.
std::string format_csv(const Table& table);
// {"meta": {...}, "data": {"column": [...], ...}}
std::string format_json(const Table& table);

Table parse_csv(std::string_view text);
Table parse_json(std::string_view text);

// Throws PreconditionError on an empty table (nothing is written) and
// std::runtime_error on I/O failure. CSV files get a `<path>.meta.json`
// sidecar holding the metadata block.
void write_table(const Table& table, Format format, const std::filesystem::path& path);
void write_table(const Table& table, Format format, std::ostream& out);

Table to_table(const TimeSeries& series);
Table to_table(const std::vector<ScanSummary>& scan);
Table to_table(const std::vector<BetaRow>& rows);

}  // namespace qbline
