#pragma once

#include <cmath>
#include <cstdlib>

#include "gaggle/common.hpp"
#include "gaggle/tensor.hpp"

namespace gaggle {

enum class LossKind { MSE, Huber };

// Mean squared error. When dpred is given it receives dL/dpred.
inline double mse_loss(const Tensor& pred, const Tensor& target, Tensor* dpred = nullptr) {
  expects(pred.same_shape(target), "mse_loss: shape mismatch");
  const double n = static_cast<double>(pred.numel());
  double acc = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double d = pred.data[i] - target.data[i];
    acc += d * d;
  }
  if (dpred) {
    *dpred = Tensor(pred.shape);
    for (size_t i = 0; i < pred.data.size(); ++i)
      dpred->data[i] = 2.0 * (pred.data[i] - target.data[i]) / n;
  }
  return acc / n;
}

// Huber loss, mean-reduced: 0.5 x^2 for |x| <= delta, delta (|x| - delta/2)
// otherwise. Value and gradient are continuous at |x| = delta.
inline double huber_loss(const Tensor& pred, const Tensor& target, double delta,
                         Tensor* dpred = nullptr) {
  expects(pred.same_shape(target), "huber_loss: shape mismatch");
  if (delta <= 0.0) throw ConfigError("huber_loss: delta must be positive");
  const double n = static_cast<double>(pred.numel());
  double acc = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double x = pred.data[i] - target.data[i];
    double ax = std::abs(x);
    acc += ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
  }
  if (dpred) {
    *dpred = Tensor(pred.shape);
    for (size_t i = 0; i < pred.data.size(); ++i) {
      double x = pred.data[i] - target.data[i];
      double g = std::abs(x) <= delta ? x : (x > 0.0 ? delta : -delta);
      dpred->data[i] = g / n;
    }
  }
  return acc / n;
}

}  // namespace gaggle
