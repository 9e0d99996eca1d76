#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "windts/common.hpp"

namespace windts::csv {

// Minimal CSV support for the simple numeric schemas this project emits:
// comma-separated, no quoting, one header line.
std::vector<std::string> split_line(const std::string& line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  int require_column(const std::string& name, const std::string& path) const;
};

Table read_table(const std::string& path);

class Writer {
 public:
  explicit Writer(const std::string& path);
  void row(const std::vector<std::string>& cells);
  ~Writer();

 private:
  std::ofstream out_;
  std::string path_;
};

double parse_double(const std::string& s);  // empty / "nan" -> NaN
std::int64_t parse_i64(const std::string& s);

// Shortest round-trip formatting so written values re-parse exactly.
std::string fmt_double(double v);

}  // namespace windts::csv
