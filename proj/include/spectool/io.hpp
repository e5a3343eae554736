#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace spectool::io {

/// Shortest-round-trip-safe text for a double: 17 significant digits, '.'
/// decimal separator regardless of locale.
std::string format_double(double v);

/// Header-first CSV writer. Rows are buffered as text and flushed on close.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// Parses a numeric CSV. A first line that does not parse as numbers is
/// treated as a header and skipped.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spectool::io
