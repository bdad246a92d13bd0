#include "ppn/metrics.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ppn {

int MetricsTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> MetricsTable::column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) throw std::invalid_argument("metrics: no column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<size_t>(idx)]);
  return out;
}

MetricsTable read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metrics file " + path);
  MetricsTable t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty metrics file " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  if (t.columns.empty()) throw std::runtime_error("metrics header empty: " + path);
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      const char* s = cell.c_str();
      char* end = nullptr;
      double v = std::strtod(s, &end);
      if (end == s || *end != '\0')
        throw std::runtime_error(path + ": parse error at row " + std::to_string(lineno) +
                                 " (cell '" + cell + "')");
      row.push_back(v);
    }
    if (row.size() != t.columns.size())
      throw std::runtime_error(path + ": parse error at row " + std::to_string(lineno) +
                               " (expected " + std::to_string(t.columns.size()) +
                               " cells, got " + std::to_string(row.size()) + ")");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace ppn
