#include "spectool/io.hpp"

#include <charconv>
#include <limits>
#include <sstream>

#include "spectool/error.hpp"

namespace spectool::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw ValidationError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() { out_.flush(); }

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (in_row_) out_ << ',';
  out_ << v;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw ValidationError("csv row has " + std::to_string(in_row_) + " cells, header has " +
                          std::to_string(columns_));
  }
  out_ << '\n';
  in_row_ = 0;
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    std::string field = line.substr(pos, comma - pos);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
    std::size_t lead = 0;
    while (lead < field.size() && field[lead] == ' ') ++lead;
    field.erase(0, lead);
    if (field == "nan" || field == "NaN" || field == "NAN") {
      row.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) return false;
      row.push_back(v);
    }
    pos = comma + 1;
  }
  return true;
}

}  // namespace

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (!parse_row(line, row)) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": non-numeric field");
    }
    rows.push_back(row);
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace spectool::io
