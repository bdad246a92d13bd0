#include "ppn/linalg.hpp"

#include <cassert>
#include <cstddef>
#include <cmath>
#include <vector>

namespace ppn {

void matmul_nn(double* c, const double* a, const double* b, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double aip = ai[p];
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nt(double* c, const double* a, const double* b, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void matmul_tn(double* c, const double* a, const double* b, int m, int n, int k) {
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<size_t>(p) * m;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      double api = ap[i];
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

double pairwise_sum(std::span<const double> xs) {
  size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }
  size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

double pop_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  std::vector<double> sq(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

void normalize_rows_inplace(double* v, int rows, int cols) {
  constexpr double kEps = 1e-8;
  for (int i = 0; i < rows; ++i) {
    double* row = v + static_cast<size_t>(i) * cols;
    double sq = 0.0;
    for (int j = 0; j < cols; ++j) sq += row[j] * row[j];
    double denom = sq > kEps * kEps ? std::sqrt(sq) : kEps;
    for (int j = 0; j < cols; ++j) row[j] /= denom;
  }
}

}  // namespace ppn
