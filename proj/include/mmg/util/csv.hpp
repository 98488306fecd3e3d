#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmg::util {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric CSV with a header row. Cells are doubles, dot decimal separator.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::filesystem::path& file);

/// Writes with enough digits (%.17g) that reading back reproduces every
/// double bit-exactly.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_f64(double v);  // shortest-ish round-trippable decimal

}  // namespace mmg::util
