#pragma once

#include <string>
#include <vector>

namespace ppn {

// A labelled curve. `band`, when non-empty, draws a shaded +/- band around y
// (same length as y). Non-finite points are skipped.
struct Series {
  std::string label;
  std::vector<double> x, y, band;
};

// Deterministic hand-rolled SVG line chart; byte-identical for equal inputs.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series);

// Bar chart with error whiskers.
void write_bar_svg(const std::string& path, const std::string& title,
                   const std::string& ylabel, const std::vector<std::string>& labels,
                   const std::vector<double>& means, const std::vector<double>& stds);

// Aggregates several runs' metrics.csv files into one Series for `metric`
// versus total_steps: per-step mean across runs with a +/- sample-std band
// (band omitted for a single run). Rows are aligned by index; runs must share
// a config. Throws std::invalid_argument on shape mismatch.
Series aggregate_metric(const std::vector<std::string>& metrics_paths,
                        const std::string& metric, const std::string& label);

}  // namespace ppn
