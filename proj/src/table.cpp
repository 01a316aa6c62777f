#include "qbline/table.hpp"

#include "qbline/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qbline {

namespace {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("malformed CSV number '" + s + "'");
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

double optional_or_nan(const std::optional<double>& v) {
  return v.value_or(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

Table::Table(std::vector<std::string> names) : columns(std::move(names)), data(columns.size()) {}

void Table::add_row(const std::vector<double>& row) {
  if (row.size() != columns.size()) throw PreconditionError("row width does not match the header");
  for (std::size_t c = 0; c < row.size(); ++c) data[c].push_back(row[c]);
}

const std::vector<double>& Table::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return data[c];
  throw PreconditionError("no column named '" + std::string(name) + "'");
}

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  throw ConfigError("unknown output format '" + text + "' (expected csv or json)");
}

std::string extension(Format format) { return format == Format::Csv ? ".csv" : ".json"; }

std::string format_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += format_number(table.data[c][r]);
    }
    out += '\n';
  }
  return out;
}

std::string format_json(const Table& table) {
  nlohmann::ordered_json doc;
  doc["meta"] = table.meta;
  nlohmann::ordered_json data = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    nlohmann::ordered_json col = nlohmann::ordered_json::array();
    for (double v : table.data[c]) {
      if (std::isfinite(v))
        col.push_back(v);
      else
        col.push_back(nullptr);
    }
    data[table.columns[c]] = std::move(col);
  }
  doc["data"] = std::move(data);
  return doc.dump() + "\n";
}

Table parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) throw std::runtime_error("empty CSV");
  Table table(split(lines.front(), ','));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split(lines[i], ',');
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f));
    table.add_row(row);
  }
  return table;
}

Table parse_json(std::string_view text) {
  const auto doc = nlohmann::ordered_json::parse(text);
  std::vector<std::string> names;
  for (const auto& [key, value] : doc.at("data").items()) names.push_back(key);
  Table table(names);
  table.meta = nlohmann::json::parse(doc.at("meta").dump());
  std::size_t c = 0;
  for (const auto& [key, value] : doc.at("data").items()) {
    for (const auto& v : value)
      table.data[c].push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : v.get<double>());
    ++c;
  }
  return table;
}

void write_table(const Table& table, Format format, const std::filesystem::path& path) {
  if (table.empty()) throw PreconditionError("refusing to write an empty table");
  if (format == Format::Csv) {
    write_file(path, format_csv(table));
    write_file(path.string() + ".meta.json", table.meta.dump(2) + "\n");
  } else {
    write_file(path, format_json(table));
  }
}

void write_table(const Table& table, Format format, std::ostream& out) {
  if (table.empty()) throw PreconditionError("refusing to write an empty table");
  out << (format == Format::Csv ? format_csv(table) : format_json(table));
  if (!out) throw std::runtime_error("write to output stream failed");
}

Table to_table(const TimeSeries& series) {
  Table t({"jt", "e_over_omega", "erg_over_omega", "p_over_omega_j"});
  for (std::size_t i = 0; i < series.jt.size(); ++i)
    t.add_row({series.jt[i], series.e[i], series.erg[i], series.p[i]});
  return t;
}

Table to_table(const std::vector<ScanSummary>& scan) {
  Table t({"n", "tau_bar", "tau_erg", "e_over_omega", "erg_over_omega", "ratio", "window",
           "window_stable"});
  for (const auto& s : scan)
    t.add_row({double(s.n), s.tau_bar, optional_or_nan(s.tau_erg), s.e_at_tau, s.erg_at_tau,
               s.ratio, s.window, s.window_stable ? 1.0 : 0.0});
  return t;
}

Table to_table(const std::vector<BetaRow>& rows) {
  Table t({"beta", "tau_bar", "erg_over_omega", "e_over_omega", "ratio"});
  for (const auto& r : rows) t.add_row({r.beta, r.tau_bar, r.erg_at_tau, r.e_at_tau, r.ratio});
  return t;
}

}  // namespace qbline
