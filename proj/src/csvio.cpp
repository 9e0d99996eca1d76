#include "windts/csvio.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace windts::csv {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') {
    cells.back().pop_back();
  }
  return cells;
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Table::require_column(const std::string& name, const std::string& path) const {
  const int c = column(name);
  if (c < 0) fail("{}: missing required column '{}'", path, name);
  return c;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '{}' for reading", path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) fail("{}: empty file", path);
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_line(line));
  }
  return t;
}

Writer::Writer(const std::string& path) : out_(path), path_(path) {
  if (!out_) fail("cannot open '{}' for writing", path);
}

void Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

Writer::~Writer() { out_.flush(); }

double parse_double(const std::string& s) {
  if (s.empty() || s == "nan" || s == "NaN" || s == "NAN") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail("cannot parse '{}' as a number", s);
  }
  return v;
}

std::int64_t parse_i64(const std::string& s) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    fail("cannot parse '{}' as an integer", s);
  }
  return v;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

}  // namespace windts::csv
