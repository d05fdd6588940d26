#pragma once

#include <continuum/tensor/tensor.hpp>

#include <cmath>
#include <functional>
#include <vector>

namespace continuum::testsupport {

// Central-difference gradient of a re-evaluated scalar function with respect
// to the in-place-mutated data of `param`.
inline std::vector<double> numeric_grad(ad::Tensor<double> param,
                                        const std::function<double()>& eval,
                                        double eps = 1e-5) {
  std::vector<double> g(param.size());
  auto& data = param.data();
  for (size_t i = 0; i < data.size(); ++i) {
    double keep = data[i];
    data[i] = keep + eps;
    double hi = eval();
    data[i] = keep - eps;
    double lo = eval();
    data[i] = keep;
    g[i] = (hi - lo) / (2 * eps);
  }
  return g;
}

// max over entries of |a-b| / max(1, |a|, |b|)
inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace continuum::testsupport
