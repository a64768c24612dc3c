#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/tensor.hpp"

namespace gaggle {

// Adam state: first/second moments aligned with the parameter list they were
// initialized from. The parameter order must stay fixed for the lifetime of
// the state (and across checkpoint save/load).
struct OptimState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;
  std::vector<std::vector<double>> m, v;

  void init(const std::vector<Tensor*>& params) {
    m.clear();
    v.clear();
    step_count = 0;
    for (const Tensor* p : params) {
      m.emplace_back(p->data.size(), 0.0);
      v.emplace_back(p->data.size(), 0.0);
    }
  }
};

// One adaptive-moment update with bias correction, reading each param's grad.
inline void adam_step(const std::vector<Tensor*>& params, OptimState& st) {
  expects(st.m.size() == params.size(), "adam_step: state/param count mismatch");
  st.step_count += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    expects(p.grad.size() == p.data.size(), "adam_step: param without grad");
    expects(st.m[i].size() == p.data.size(), "adam_step: moment shape mismatch");
    double* m = st.m[i].data();
    double* v = st.v[i].data();
    double* w = p.data.data();
    const double* g = p.grad.data();
    const int64_t n = static_cast<int64_t>(p.data.size());
    p.version += 1;
    constexpr int64_t kChunk = 65536;
    const int chunks = static_cast<int>((n + kChunk - 1) / kChunk);
    parallel_for(chunks, [&](int c) {
      const int64_t j0 = c * kChunk, j1 = std::min(n, j0 + kChunk);
      for (int64_t j = j0; j < j1; ++j) {
        m[j] = st.beta1 * m[j] + (1.0 - st.beta1) * g[j];
        v[j] = st.beta2 * v[j] + (1.0 - st.beta2) * g[j] * g[j];
        w[j] -= st.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + st.eps);
      }
    });
  }
}

// Plain gradient descent.
inline void sgd_step(const std::vector<Tensor*>& params, double lr) {
  for (Tensor* p : params) {
    expects(p->grad.size() == p->data.size(), "sgd_step: param without grad");
    p->version += 1;
    for (size_t j = 0; j < p->data.size(); ++j) p->data[j] -= lr * p->grad[j];
  }
}

}  // namespace gaggle
