#include "ppn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ppn/linalg.hpp"
#include "ppn/metrics.hpp"

namespace ppn {

namespace {

constexpr double kW = 720, kH = 440;
constexpr double kL = 70, kR = 20, kT = 40, kB = 50;  // margins
const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Range {
  double lo = 0.0, hi = 1.0;
  void grow(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

class SvgFile {
 public:
  explicit SvgFile(const std::string& path) : f_(std::fopen(path.c_str(), "w")) {
    if (!f_) throw std::runtime_error("cannot open " + path + " for writing");
    put("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" +
        fmt(kH) + "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) + "\">\n");
    put("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  }
  ~SvgFile() {
    put("</svg>\n");
    std::fclose(f_);
  }
  void put(const std::string& s) { std::fputs(s.c_str(), f_); }
  void text(double x, double y, const std::string& s, const std::string& extra = "") {
    put("<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) +
        "\" font-family=\"sans-serif\" font-size=\"12\" " + extra + ">" + xml_escape(s) +
        "</text>\n");
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke) {
    put("<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
        fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n");
  }

 private:
  FILE* f_;
};

void draw_axes(SvgFile& svg, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const Range& xr, const Range& yr) {
  svg.line(kL, kH - kB, kW - kR, kH - kB, "black");
  svg.line(kL, kT, kL, kH - kB, "black");
  svg.text(kW / 2 - 4.0 * title.size() / 2, kT - 16, title);
  svg.text(kW / 2 - 3.0 * xlabel.size(), kH - 12, xlabel);
  svg.text(12, kT - 8, ylabel);
  for (int i = 0; i <= 5; ++i) {
    double fx = kL + (kW - kL - kR) * i / 5.0;
    double vx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    svg.line(fx, kH - kB, fx, kH - kB + 4, "black");
    svg.text(fx - 15, kH - kB + 18, fmt(vx));
    double fy = kH - kB - (kH - kT - kB) * i / 5.0;
    double vy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
    svg.line(kL - 4, fy, kL, fy, "black");
    svg.text(8, fy + 4, fmt(vy));
  }
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series) {
  Range xr, yr;
  bool any = false;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      double b = i < s.band.size() && std::isfinite(s.band[i]) ? s.band[i] : 0.0;
      if (!any) {
        xr = {s.x[i], s.x[i]};
        yr = {s.y[i] - b, s.y[i] + b};
        any = true;
      } else {
        xr.grow(s.x[i]);
        yr.grow(s.y[i] - b);
        yr.grow(s.y[i] + b);
      }
    }
  if (!any) {
    xr = {0, 1};
    yr = {0, 1};
  }
  if (xr.hi == xr.lo) xr.hi = xr.lo + 1;
  if (yr.hi == yr.lo) yr.hi = yr.lo + 1;

  auto px = [&](double v) { return kL + (kW - kL - kR) * (v - xr.lo) / (xr.hi - xr.lo); };
  auto py = [&](double v) {
    return kH - kB - (kH - kT - kB) * (v - yr.lo) / (yr.hi - yr.lo);
  };

  SvgFile svg(path);
  draw_axes(svg, title, xlabel, ylabel, xr, yr);
  for (size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    if (!s.band.empty()) {
      std::string pts;
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || !std::isfinite(s.band[i])) continue;
        pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i] + s.band[i])) + " ";
      }
      for (size_t i = s.x.size(); i-- > 0;) {
        if (!std::isfinite(s.y[i]) || !std::isfinite(s.band[i])) continue;
        pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i] - s.band[i])) + " ";
      }
      if (!pts.empty())
        svg.put("<polygon points=\"" + pts + "\" fill=\"" + color +
                "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n");
    }
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    }
    svg.put("<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
            "\" stroke-width=\"1.5\"/>\n");
    double ly = kT + 16.0 * (si + 1);
    svg.line(kW - kR - 130, ly - 4, kW - kR - 110, ly - 4, color);
    svg.text(kW - kR - 104, ly, s.label);
  }
}

void write_bar_svg(const std::string& path, const std::string& title,
                   const std::string& ylabel, const std::vector<std::string>& labels,
                   const std::vector<double>& means, const std::vector<double>& stds) {
  if (labels.size() != means.size() || labels.size() != stds.size())
    throw std::invalid_argument("write_bar_svg: size mismatch");
  Range yr;
  yr.grow(0.0);
  for (size_t i = 0; i < means.size(); ++i) {
    yr.grow(means[i] - stds[i]);
    yr.grow(means[i] + stds[i]);
  }
  if (yr.hi == yr.lo) yr.hi = yr.lo + 1;
  auto py = [&](double v) {
    return kH - kB - (kH - kT - kB) * (v - yr.lo) / (yr.hi - yr.lo);
  };
  SvgFile svg(path);
  Range xr{0.0, static_cast<double>(labels.size())};
  draw_axes(svg, title, "", ylabel, xr, yr);
  double span = kW - kL - kR;
  double slot = span / labels.size();
  for (size_t i = 0; i < labels.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof *kPalette)];
    double cx = kL + slot * (i + 0.5);
    double w = slot * 0.5;
    double y0 = py(0.0), y1 = py(means[i]);
    double top = std::min(y0, y1);
    svg.put("<rect x=\"" + fmt(cx - w / 2) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(w) +
            "\" height=\"" + fmt(std::abs(y1 - y0)) + "\" fill=\"" + color +
            "\" fill-opacity=\"0.7\"/>\n");
    svg.line(cx, py(means[i] - stds[i]), cx, py(means[i] + stds[i]), "black");
    svg.text(cx - 3.5 * labels[i].size(), kH - kB + 32, labels[i]);
  }
}

Series aggregate_metric(const std::vector<std::string>& metrics_paths,
                        const std::string& metric, const std::string& label) {
  if (metrics_paths.empty()) throw std::invalid_argument("aggregate_metric: no inputs");
  std::vector<std::vector<double>> ys;
  std::vector<double> xs;
  for (size_t k = 0; k < metrics_paths.size(); ++k) {
    MetricsTable t = read_metrics_csv(metrics_paths[k]);
    std::vector<double> x = t.column("total_steps");
    std::vector<double> y = t.column(metric);
    if (k == 0) {
      xs = x;
    } else if (x.size() != xs.size()) {
      throw std::invalid_argument("aggregate_metric: run length mismatch (" +
                                  metrics_paths[k] + ")");
    }
    ys.push_back(std::move(y));
  }
  Series s;
  s.label = label;
  s.x = xs;
  s.y.resize(xs.size());
  if (ys.size() > 1) s.band.resize(xs.size());
  std::vector<double> col(ys.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    for (size_t k = 0; k < ys.size(); ++k) col[k] = ys[k][i];
    s.y[i] = mean_of(col);
    if (ys.size() > 1) s.band[i] = pop_std(col);
  }
  return s;
}

}  // namespace ppn
