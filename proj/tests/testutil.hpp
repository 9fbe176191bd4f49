#pragma once

// Shared helpers for the test binaries: central-finite-difference gradient
// checking against the autodiff engine, and small random tensor factories.

#include <cmath>
#include <functional>
#include <vector>

#include "ssf/tensor.hpp"

namespace ssftest {

inline ssf::Tensor randn(const ssf::Shape& s, ssf::Rng& rng,
                         double scale = 1.0) {
  ssf::Tensor t = ssf::Tensor::zeros(s);
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

// Compares d loss / d leaves against central differences. `loss` must build a
// fresh graph from the current leaf values on every call. Returns the worst
// relative error max(|a-n| / max(1e-8, |a|+|n|)).
inline double grad_check(const std::function<ssf::Tensor()>& loss,
                         std::vector<ssf::Tensor> leaves, double eps = 1e-5) {
  for (auto& l : leaves) {
    l.set_requires_grad(true);
    l.zero_grad();
  }
  ssf::Tensor out = loss();
  out.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves) analytic.push_back(l.grad());

  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& data = leaves[li].data();
    for (size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double fp = loss().item();
      data[i] = saved - eps;
      const double fm = loss().item();
      data[i] = saved;
      const double num = (fp - fm) / (2 * eps);
      const double ana = analytic[li][i];
      const double denom = std::max(1e-8, std::abs(num) + std::abs(ana));
      worst = std::max(worst, std::abs(num - ana) / denom);
    }
  }
  return worst;
}

}  // namespace ssftest
