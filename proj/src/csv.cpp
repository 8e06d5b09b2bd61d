#include "loadfc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "loadfc/errors.hpp"

namespace loadfc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("CSV is missing column '" + name + "'");
}

std::string format_number(double value) {
  char buf[512];
  const double mag = std::abs(value);
  const bool plain = mag == 0.0 || (mag >= 1e-4 && mag < 1e15);
  auto [ptr, ec] = plain ? std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed)
                         : std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw DataError("cannot format number");
  return std::string(buf, ptr);
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw DataError("malformed number '" + text + "'");
  }
  return value;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("file not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << contents;
  if (!out) throw ConfigError("write failed for " + path.string());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (first) {
      table.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError("CSV line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (first) throw DataError("CSV is empty (header required)");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text_file(path, to_csv(table));
}

DailySeries series_from_csv(const CsvTable& table) {
  if (table.header.size() != 2 || table.header[0] != "date" || table.header[1] != "consumption") {
    throw DataError("data CSV header must be 'date,consumption'");
  }
  if (table.rows.empty()) throw DataError("data CSV has no rows");
  const Date start = parse_date(table.rows.front()[0]);
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const Date d = parse_date(table.rows[i][0]);
    const Date expected = add_days(start, static_cast<long>(i));
    if (d != expected) {
      throw DataError("data CSV rows must be consecutive days: expected " + format_date(expected) +
                      ", found " + table.rows[i][0]);
    }
    values.push_back(parse_number(table.rows[i][1]));
  }
  return DailySeries(start, std::move(values));
}

DailySeries read_series_csv(const std::filesystem::path& path) {
  return series_from_csv(read_csv(path));
}

CsvTable series_to_csv(const DailySeries& series) {
  CsvTable t;
  t.header = {"date", "consumption"};
  t.rows.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    t.rows.push_back({format_date(series.date_at(i)), format_number(series.value(i))});
  }
  return t;
}

}  // namespace loadfc
