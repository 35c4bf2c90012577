#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "macm/util.hpp"

namespace macm {

// Minimal CSV support: UTF-8, header row, comma delimiter, optional
// double-quoted cells (no embedded commas). Enough for the tabular datasets
// this library targets.

inline std::string trim_cell(std::string s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim_cell(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim_cell(cur));
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw SchemaError("column '" + name + "' not found in CSV header");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open CSV file: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV file: " + path);
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.header.size())
      throw SchemaError("row with " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(table.header.size()) + " in " + path);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

// Missing-value tokens: empty cell, "NA", "N/A" (the source datasets use all three).
inline bool is_missing_cell(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "N/A";
}

inline double parse_numeric_cell(const std::string& cell, const std::string& column) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw SchemaError("non-numeric cell '" + cell + "' in numeric column '" + column + "'");
  }
  if (pos != cell.size())
    throw SchemaError("non-numeric cell '" + cell + "' in numeric column '" + column + "'");
  return v;
}

}  // namespace macm
