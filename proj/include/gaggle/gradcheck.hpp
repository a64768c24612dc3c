#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gaggle/rng.hpp"
#include "gaggle/tensor.hpp"

namespace gaggle {

// Compares reverse-mode gradients against central finite differences.
//
// f(compute_grad) evaluates the scalar objective over the current contents of
// `inputs`; when compute_grad is true it must additionally leave dL/dx in each
// input's grad (fresh, not accumulated on top of stale values). The harness
// then perturbs sampled coordinates of each input by +-h and compares.
//
// Tensors larger than the per-tensor budget are sampled at seeded random
// coordinates; smaller ones are checked exhaustively. Returns the max
// relative error over all checked coordinates.
inline double grad_check(const std::function<double(bool)>& f, const std::vector<Tensor*>& inputs,
                         double h = 1e-5, int budget_per_tensor = 400, uint64_t seed = 1234) {
  f(true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (Tensor* t : inputs) analytic.push_back(t->grad);

  SplitMix64 rng(seed);
  double max_rel = 0.0;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor& t = *inputs[ti];
    const int64_t n = t.numel();
    std::vector<int64_t> coords;
    if (n <= budget_per_tensor) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int i = 0; i < budget_per_tensor; ++i)
        coords.push_back(static_cast<int64_t>(rng.next() % static_cast<uint64_t>(n)));
    }
    for (int64_t c : coords) {
      const double saved = t.data[static_cast<size_t>(c)];
      t.data[static_cast<size_t>(c)] = saved + h;
      t.version += 1;
      double lp = f(false);
      t.data[static_cast<size_t>(c)] = saved - h;
      t.version += 1;
      double lm = f(false);
      t.data[static_cast<size_t>(c)] = saved;
      t.version += 1;
      double numeric = (lp - lm) / (2.0 * h);
      double a = analytic[ti][static_cast<size_t>(c)];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace gaggle
