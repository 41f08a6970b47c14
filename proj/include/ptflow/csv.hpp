#ifndef PTFLOW_CSV_HPP
#define PTFLOW_CSV_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ptflow/common.hpp"

namespace ptflow {

/// UTF-8 CSV with a header row and %.17g decimal floats.
inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  if (columns.empty() || header.size() != columns.size())
    throw Error("write_csv: header/column mismatch");
  const std::size_t rows = columns[0].size();
  for (const auto& c : columns)
    if (c.size() != rows) throw Error("write_csv: ragged columns");

  std::ofstream out(path);
  if (!out) throw Error("write_csv: cannot open " + path);
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", columns[j][i]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw Error("write_csv: write failed for " + path);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_csv: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error("read_csv: empty file " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  t.columns.resize(t.header.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(ss, cell, ',')) {
      if (j >= t.columns.size())
        throw Error("read_csv: extra column at line " + std::to_string(lineno));
      try {
        t.columns[j].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error("read_csv: bad number '" + cell + "' at line " +
                    std::to_string(lineno));
      }
      ++j;
    }
    if (j != t.columns.size())
      throw Error("read_csv: short row at line " + std::to_string(lineno));
  }
  return t;
}

}  // namespace ptflow

#endif
