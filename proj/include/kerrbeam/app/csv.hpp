#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/quadrature.hpp"

namespace kerrbeam::app {

using quadrature::format_number;

/// Numeric CSV built in memory: one header line, then rows of numbers with
/// 17 significant digits so that reading back gives the same doubles.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::initializer_list<double> values) { add_row(std::vector<double>(values)); }

  void add_row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
      throw InvalidArgument("csv row has " + std::to_string(values.size()) + " values, expected " +
                            std::to_string(columns_.size()));
    rows_.push_back(values);
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  std::string str() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) out += ',';
      out += columns_[c];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += format_number(row[c]);
      }
      out += '\n';
    }
    return out;
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c)
      if (columns_[c] == name) return c;
    throw InvalidArgument("csv has no column '" + std::string(name) + "'");
  }

  std::vector<double> column_values(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) out.push_back(row[c]);
    return out;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

inline CsvTable parse_csv(std::string_view text, const std::string& source = "<csv>") {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const auto nl = text.find('\n', pos);
    line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    return true;
  };
  auto split = [](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  };
  std::string_view line;
  if (!next_line(line)) throw InvalidArgument(source + ": empty csv");
  for (auto f : split(line)) cols.emplace_back(f);
  CsvTable table(cols);
  std::size_t line_no = 1;
  while (next_line(line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    std::vector<double> row;
    for (auto f : fields) {
      double v = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw InvalidArgument(source + ":" + std::to_string(line_no) + ": not a number '" + std::string(f) + "'");
      row.push_back(v);
    }
    if (row.size() != cols.size())
      throw InvalidArgument(source + ":" + std::to_string(line_no) + ": wrong number of fields");
    table.add_row(row);
  }
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open csv '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

}  // namespace kerrbeam::app
