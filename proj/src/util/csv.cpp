#include "mmg/util/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mmg::util {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CsvError("cannot open CSV file: " + file.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV file: " + file.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line, ',');
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != t.header.size())
      throw CsvError(file.string() + ": row " + std::to_string(lineno) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(t.header.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const char* s = cells[c].c_str();
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s || *end != '\0')
        throw CsvError(file.string() + ": row " + std::to_string(lineno) + ", field '" +
                       t.header[c] + "': not a number: '" + cells[c] + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string format_f64(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(file);
  if (!out) throw CsvError("cannot write CSV file: " + file.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_f64(row[i]);
    }
    out << '\n';
  }
  if (!out) throw CsvError("write failed: " + file.string());
}

}  // namespace mmg::util
