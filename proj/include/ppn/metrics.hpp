#pragma once

#include <string>
#include <vector>

namespace ppn {

struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;  // -1 if absent
  // Whole column by name; throws std::invalid_argument if absent.
  std::vector<double> column(const std::string& name) const;
};

// Parses a metrics.csv. Malformed content throws std::runtime_error naming
// the offending row.
MetricsTable read_metrics_csv(const std::string& path);

}  // namespace ppn
