#pragma once

// Central-difference gradient checks over PPNParams.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ppn/model.hpp"

namespace testsup {

// d(loss)/d(theta) by central differences, laid out like PPNParams::all().
// `loss` must re-evaluate from the current contents of `p`.
inline std::vector<std::vector<double>> fd_gradients(ppn::PPNParams& p,
                                                     const std::function<double()>& loss,
                                                     double h = 1e-5) {
  std::vector<std::vector<double>> out;
  for (ppn::ParamTensor* t : p.all()) {
    std::vector<double> g(t->data.size());
    for (size_t k = 0; k < t->data.size(); ++k) {
      double keep = t->data[k];
      t->data[k] = keep + h;
      double up = loss();
      t->data[k] = keep - h;
      double dn = loss();
      t->data[k] = keep;
      g[k] = (up - dn) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// max over components of |a-b| / max(floor, |a|, |b|).
inline double max_rel_err(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (size_t k = 0; k < a.size(); ++k)
    for (size_t i = 0; i < a[k].size(); ++i) {
      double denom = std::max({floor, std::fabs(a[k][i]), std::fabs(b[k][i])});
      worst = std::max(worst, std::fabs(a[k][i] - b[k][i]) / denom);
    }
  return worst;
}

}  // namespace testsup
