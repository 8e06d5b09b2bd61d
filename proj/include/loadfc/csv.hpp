#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "loadfc/series.hpp"

namespace loadfc {

/// Plain comma-separated table. No quoting; none of our formats need it.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name, or throws DataError.
  std::size_t column(const std::string& name) const;
};

/// Shortest text that round-trips the double exactly.
std::string format_number(double value);
double parse_number(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Reads `date,consumption`; rows must be consecutive days.
DailySeries read_series_csv(const std::filesystem::path& path);
DailySeries series_from_csv(const CsvTable& table);
CsvTable series_to_csv(const DailySeries& series);

}  // namespace loadfc
