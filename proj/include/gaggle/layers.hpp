#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/rng.hpp"
#include "gaggle/tensor.hpp"

namespace gaggle {

enum class PadMode { Valid, Toroidal };

// Architecture descriptor for one layer; composable chains of these define a
// network and are stored verbatim in checkpoints.
struct LayerSpec {
  enum class Kind { Conv2d, BatchNorm2d, LeakyReLU, Linear, Flatten };
  Kind kind = Kind::Flatten;

  // Conv2d
  int in_ch = 0, out_ch = 0, kh = 0, kw = 0;
  PadMode pad = PadMode::Valid;
  // BatchNorm2d (channels = in_ch)
  double eps = 1e-5, momentum = 0.1;
  // LeakyReLU
  double negative_slope = 0.01;
  // Linear
  int in_features = 0, out_features = 0;

  static LayerSpec conv2d(int in_ch, int out_ch, int kh, int kw, PadMode pad) {
    LayerSpec s;
    s.kind = Kind::Conv2d;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    s.kh = kh;
    s.kw = kw;
    s.pad = pad;
    return s;
  }
  static LayerSpec batchnorm2d(int channels, double eps = 1e-5, double momentum = 0.1) {
    LayerSpec s;
    s.kind = Kind::BatchNorm2d;
    s.in_ch = channels;
    s.eps = eps;
    s.momentum = momentum;
    return s;
  }
  static LayerSpec leaky_relu(double negative_slope = 0.01) {
    LayerSpec s;
    s.kind = Kind::LeakyReLU;
    s.negative_slope = negative_slope;
    return s;
  }
  static LayerSpec linear(int in_features, int out_features) {
    LayerSpec s;
    s.kind = Kind::Linear;
    s.in_features = in_features;
    s.out_features = out_features;
    return s;
  }
  static LayerSpec flatten() { return LayerSpec{}; }
};

// A layer owns its parameters and the forward caches needed by backward.
// backward() must follow the forward() whose caches are still current, and
// accumulates into param grads (callers zero them per training step).
struct Layer {
  virtual ~Layer() = default;
  virtual const LayerSpec& spec() const = 0;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<Tensor*> state_buffers() { return {}; }
};

// ---- Conv2d ---------------------------------------------------------------

class Conv2d final : public Layer {
 public:
  Conv2d(LayerSpec spec, SplitMix64& rng) : spec_(spec) {
    w_ = Tensor({spec.out_ch, spec.in_ch, spec.kh, spec.kw});
    b_ = Tensor({spec.out_ch});
    double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_ch) * spec.kh * spec.kw);
    for (auto& v : w_.data) v = rng.uniform(-bound, bound);
    for (auto& v : b_.data) v = rng.uniform(-bound, bound);
    w_.set_requires_grad(true);
    b_.set_requires_grad(true);
  }

  const LayerSpec& spec() const override { return spec_; }
  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }

  Tensor forward(const Tensor& x, bool) override {
    expects(x.ndim() == 4 && x.dim(1) == spec_.in_ch, "Conv2d: bad input shape");
    B_ = x.dim(0);
    H_ = x.dim(2);
    W_ = x.dim(3);
    if (spec_.pad == PadMode::Valid) {
      expects(H_ >= spec_.kh && W_ >= spec_.kw, "Conv2d: input smaller than kernel");
      Ho_ = H_ - spec_.kh + 1;
      Wo_ = W_ - spec_.kw + 1;
    } else {
      expects(spec_.kh % 2 == 1 && spec_.kw % 2 == 1, "Conv2d: toroidal pad needs odd kernel");
      Ho_ = H_;
      Wo_ = W_;
    }
    const int M = spec_.out_ch, Cin = spec_.in_ch;
    const int T = spec_.kh * spec_.kw, K = Cin * T, N = Ho_ * Wo_;
    build_src_table();

    // W^T shared by all samples, rebuilt only when the weights changed.
    if (wt_stamp_ != w_.version || wt_.size() != static_cast<size_t>(K) * M) {
      wt_.resize(static_cast<size_t>(K) * M);
      transpose(w_.data.data(), wt_.data(), M, K);
      wt_stamp_ = w_.version;
    }

    cols_t_.resize(static_cast<size_t>(B_) * N * K);
    out_t_.resize(static_cast<size_t>(B_) * N * M);
    Tensor y({B_, M, Ho_, Wo_});
    parallel_for(B_, [&](int b) {
      const double* xs = x.data.data() + static_cast<size_t>(b) * Cin * H_ * W_;
      double* cols = cols_t_.data() + static_cast<size_t>(b) * N * K;
      for (int n = 0; n < N; ++n) {
        const int* src = src_table_.data() + static_cast<size_t>(n) * T;
        double* row = cols + static_cast<size_t>(n) * K;
        for (int ci = 0; ci < Cin; ++ci) {
          const double* plane = xs + static_cast<size_t>(ci) * H_ * W_;
          for (int t = 0; t < T; ++t) row[ci * T + t] = plane[src[t]];
        }
      }
      double* out_t = out_t_.data() + static_cast<size_t>(b) * N * M;
      std::fill(out_t, out_t + static_cast<size_t>(N) * M, 0.0);
      gemm_nn_acc(cols, wt_.data(), out_t, N, K, M);
      for (int n = 0; n < N; ++n) axpy(M, 1.0, b_.data.data(), out_t + static_cast<size_t>(n) * M);
      transpose(out_t, y.data.data() + static_cast<size_t>(b) * M * N, N, M);
    });
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const int M = spec_.out_ch, Cin = spec_.in_ch;
    const int T = spec_.kh * spec_.kw, K = Cin * T, N = Ho_ * Wo_;
    expects(dy.ndim() == 4 && dy.dim(0) == B_ && dy.dim(1) == M && dy.dim(2) == Ho_ && dy.dim(3) == Wo_,
            "Conv2d: bad upstream gradient shape");

    Tensor dx({B_, Cin, H_, W_});
    dout_t_.resize(static_cast<size_t>(B_) * N * M);
    dcols_.resize(static_cast<size_t>(B_) * N * K);
    parallel_for(B_, [&](int b) {
      const double* dys = dy.data.data() + static_cast<size_t>(b) * M * N;
      double* dout_t = dout_t_.data() + static_cast<size_t>(b) * N * M;
      transpose(dys, dout_t, M, N);
      double* dcols = dcols_.data() + static_cast<size_t>(b) * N * K;
      std::fill(dcols, dcols + static_cast<size_t>(N) * K, 0.0);
      gemm_nn_acc(dout_t, w_.data.data(), dcols, N, M, K);
      double* dxs = dx.data.data() + static_cast<size_t>(b) * Cin * H_ * W_;
      for (int n = 0; n < N; ++n) {
        const int* src = src_table_.data() + static_cast<size_t>(n) * T;
        const double* row = dcols + static_cast<size_t>(n) * K;
        for (int ci = 0; ci < Cin; ++ci) {
          double* plane = dxs + static_cast<size_t>(ci) * H_ * W_;
          for (int t = 0; t < T; ++t) plane[src[t]] += row[ci * T + t];
        }
      }
    });

    // dW: samples outermost so each sample's patch panel is read once while
    // it is cache-resident; every dW row accumulates in fixed (sample, n)
    // order.
    for (int b = 0; b < B_; ++b) {
      const double* dout_t = dout_t_.data() + static_cast<size_t>(b) * N * M;
      const double* cols = cols_t_.data() + static_cast<size_t>(b) * N * K;
      gemm_tn_acc_rows(dout_t, cols, w_.grad.data(), N, M, K, 0, M);
      for (int m = 0; m < M; ++m) {
        double db = 0.0;
        for (int n = 0; n < N; ++n) db += dout_t[static_cast<size_t>(n) * M + m];
        b_.grad[m] += db;
      }
    }
    return dx;
  }

 private:
  void build_src_table() {
    const int T = spec_.kh * spec_.kw;
    src_table_.assign(static_cast<size_t>(Ho_) * Wo_ * T, 0);
    for (int oh = 0; oh < Ho_; ++oh) {
      for (int ow = 0; ow < Wo_; ++ow) {
        int* row = src_table_.data() + (static_cast<size_t>(oh) * Wo_ + ow) * T;
        for (int dh = 0; dh < spec_.kh; ++dh) {
          for (int dw = 0; dw < spec_.kw; ++dw) {
            int ih, iw;
            if (spec_.pad == PadMode::Valid) {
              ih = oh + dh;
              iw = ow + dw;
            } else {
              ih = (oh + dh - spec_.kh / 2 + H_) % H_;
              iw = (ow + dw - spec_.kw / 2 + W_) % W_;
            }
            row[dh * spec_.kw + dw] = ih * W_ + iw;
          }
        }
      }
    }
  }

  LayerSpec spec_;
  Tensor w_, b_;
  int B_ = 0, H_ = 0, W_ = 0, Ho_ = 0, Wo_ = 0;
  std::vector<int> src_table_;    // output spatial index -> input spatial indices
  std::vector<double> wt_;        // cached W^T
  uint64_t wt_stamp_ = 0;         // w_.version the cache was built from
  std::vector<double> cols_t_;    // cached patches, per sample (N x K)
  std::vector<double> out_t_;     // spatial-major outputs, per sample (N x M)
  std::vector<double> dout_t_;    // transposed upstream grads, per sample (N x M)
  std::vector<double> dcols_;     // patch gradients, per sample (N x K)
};

// ---- BatchNorm2d ----------------------------------------------------------

class BatchNorm2d final : public Layer {
 public:
  explicit BatchNorm2d(LayerSpec spec) : spec_(spec) {
    gamma_ = Tensor::full({spec.in_ch}, 1.0);
    beta_ = Tensor({spec.in_ch});
    running_mean_ = Tensor({spec.in_ch});
    running_var_ = Tensor::full({spec.in_ch}, 1.0);
    gamma_.set_requires_grad(true);
    beta_.set_requires_grad(true);
  }

  const LayerSpec& spec() const override { return spec_; }
  std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
  std::vector<Tensor*> state_buffers() override { return {&running_mean_, &running_var_}; }

  Tensor forward(const Tensor& x, bool training) override {
    expects(x.ndim() == 4 && x.dim(1) == spec_.in_ch, "BatchNorm2d: bad input shape");
    B_ = x.dim(0);
    HW_ = x.dim(2) * x.dim(3);
    shape_ = x.shape;
    trained_mode_ = training;
    const int C = spec_.in_ch;
    const int64_t n = static_cast<int64_t>(B_) * HW_;

    Tensor y(x.shape);
    xhat_.assign(x.data.size(), 0.0);
    inv_std_.assign(static_cast<size_t>(C), 0.0);

    parallel_for(C, [&](int c) {
      double mean, inv;
      if (training) {
        double sum = 0.0;
        for (int b = 0; b < B_; ++b) {
          const double* p = plane(x, b, c);
          for (int i = 0; i < HW_; ++i) sum += p[i];
        }
        mean = sum / static_cast<double>(n);
        double var_sum = 0.0;
        for (int b = 0; b < B_; ++b) {
          const double* p = plane(x, b, c);
          for (int i = 0; i < HW_; ++i) {
            double d = p[i] - mean;
            var_sum += d * d;
          }
        }
        double var = var_sum / static_cast<double>(n);
        inv = 1.0 / std::sqrt(var + spec_.eps);
        double var_unbiased = n > 1 ? var_sum / static_cast<double>(n - 1) : var;
        running_mean_.data[c] = (1.0 - spec_.momentum) * running_mean_.data[c] + spec_.momentum * mean;
        running_var_.data[c] = (1.0 - spec_.momentum) * running_var_.data[c] + spec_.momentum * var_unbiased;
      } else {
        mean = running_mean_.data[c];
        inv = 1.0 / std::sqrt(running_var_.data[c] + spec_.eps);
      }
      inv_std_[c] = inv;
      double g = gamma_.data[c], be = beta_.data[c];
      for (int b = 0; b < B_; ++b) {
        const double* p = plane(x, b, c);
        double* xh = xhat_.data() + plane_offset(b, c);
        double* yp = y.data.data() + plane_offset(b, c);
        for (int i = 0; i < HW_; ++i) {
          double v = (p[i] - mean) * inv;
          xh[i] = v;
          yp[i] = g * v + be;
        }
      }
    });
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    expects(dy.shape == shape_, "BatchNorm2d: bad upstream gradient shape");
    const int C = spec_.in_ch;
    const double n = static_cast<double>(static_cast<int64_t>(B_) * HW_);
    Tensor dx(shape_);

    parallel_for(C, [&](int c) {
      double s1 = 0.0, s2 = 0.0;
      for (int b = 0; b < B_; ++b) {
        const double* d = dy.data.data() + plane_offset(b, c);
        const double* xh = xhat_.data() + plane_offset(b, c);
        for (int i = 0; i < HW_; ++i) {
          s1 += d[i];
          s2 += d[i] * xh[i];
        }
      }
      gamma_.grad[c] += s2;
      beta_.grad[c] += s1;
      double g = gamma_.data[c], inv = inv_std_[c];
      for (int b = 0; b < B_; ++b) {
        const double* d = dy.data.data() + plane_offset(b, c);
        const double* xh = xhat_.data() + plane_offset(b, c);
        double* dp = dx.data.data() + plane_offset(b, c);
        if (trained_mode_) {
          for (int i = 0; i < HW_; ++i) dp[i] = g * inv / n * (n * d[i] - s1 - xh[i] * s2);
        } else {
          for (int i = 0; i < HW_; ++i) dp[i] = g * inv * d[i];
        }
      }
    });
    return dx;
  }

 private:
  size_t plane_offset(int b, int c) const {
    return (static_cast<size_t>(b) * spec_.in_ch + c) * HW_;
  }
  const double* plane(const Tensor& x, int b, int c) const { return x.data.data() + plane_offset(b, c); }

  LayerSpec spec_;
  Tensor gamma_, beta_, running_mean_, running_var_;
  int B_ = 0, HW_ = 0;
  bool trained_mode_ = false;
  std::vector<int> shape_;
  std::vector<double> xhat_, inv_std_;
};

// ---- LeakyReLU ------------------------------------------------------------

class LeakyReLU final : public Layer {
 public:
  explicit LeakyReLU(LayerSpec spec) : spec_(spec) {}

  const LayerSpec& spec() const override { return spec_; }

  Tensor forward(const Tensor& x, bool) override {
    shape_ = x.shape;
    neg_.resize(x.data.size());
    Tensor y(x.shape);
    const double s = spec_.negative_slope;
    for (size_t i = 0; i < x.data.size(); ++i) {
      double v = x.data[i];
      bool neg = v < 0.0;
      neg_[i] = neg;
      y.data[i] = neg ? s * v : v;
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    expects(dy.shape == shape_, "LeakyReLU: bad upstream gradient shape");
    Tensor dx(shape_);
    const double s = spec_.negative_slope;
    for (size_t i = 0; i < dy.data.size(); ++i) dx.data[i] = dy.data[i] * (neg_[i] ? s : 1.0);
    return dx;
  }

 private:
  LayerSpec spec_;
  std::vector<int> shape_;
  std::vector<uint8_t> neg_;  // sign mask from the last forward
};

// ---- Linear ---------------------------------------------------------------

class Linear final : public Layer {
 public:
  Linear(LayerSpec spec, SplitMix64& rng) : spec_(spec) {
    w_ = Tensor({spec.out_features, spec.in_features});
    b_ = Tensor({spec.out_features});
    double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_features));
    for (auto& v : w_.data) v = rng.uniform(-bound, bound);
    for (auto& v : b_.data) v = rng.uniform(-bound, bound);
    w_.set_requires_grad(true);
    b_.set_requires_grad(true);
  }

  const LayerSpec& spec() const override { return spec_; }
  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }

  Tensor forward(const Tensor& x, bool) override {
    expects(x.ndim() == 2 && x.dim(1) == spec_.in_features, "Linear: bad input shape");
    const int B = x.dim(0), F = spec_.in_features, O = spec_.out_features;
    x_ = x;
    if (wt_stamp_ != w_.version || wt_.size() != static_cast<size_t>(F) * O) {
      wt_.resize(static_cast<size_t>(F) * O);
      transpose(w_.data.data(), wt_.data(), O, F);
      wt_stamp_ = w_.version;
    }
    Tensor y({B, O});
    // Wide row chunks so the tiled kernel keeps its weight panel resident.
    constexpr int kRows = 32;
    const int chunks = (B + kRows - 1) / kRows;
    parallel_for(chunks, [&](int c) {
      const int b0 = c * kRows, b1 = std::min(B, b0 + kRows);
      for (int b = b0; b < b1; ++b)
        axpy(O, 1.0, b_.data.data(), y.data.data() + static_cast<size_t>(b) * O);
      gemm_nn_acc(x.data.data() + static_cast<size_t>(b0) * F, wt_.data(),
                  y.data.data() + static_cast<size_t>(b0) * O, b1 - b0, F, O);
    });
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const int B = x_.dim(0), F = spec_.in_features, O = spec_.out_features;
    expects(dy.ndim() == 2 && dy.dim(0) == B && dy.dim(1) == O, "Linear: bad upstream gradient shape");
    Tensor dx({B, F});
    constexpr int kRows = 32;
    const int row_chunks = (B + kRows - 1) / kRows;
    parallel_for(row_chunks, [&](int c) {
      const int b0 = c * kRows, b1 = std::min(B, b0 + kRows);
      gemm_nn_acc(dy.data.data() + static_cast<size_t>(b0) * O, w_.data.data(),
                  dx.data.data() + static_cast<size_t>(b0) * F, b1 - b0, O, F);
    });
    // dW rows chunked across threads, serial over the batch inside each row.
    constexpr int kChunk = 16;
    const int chunks = (O + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](int c) {
      const int o0 = c * kChunk, o1 = std::min(O, o0 + kChunk);
      gemm_tn_acc_rows(dy.data.data(), x_.data.data(), w_.grad.data(), B, O, F, o0, o1);
      for (int o = o0; o < o1; ++o) {
        double db = 0.0;
        for (int b = 0; b < B; ++b) db += dy.data[static_cast<size_t>(b) * O + o];
        b_.grad[o] += db;
      }
    });
    return dx;
  }

 private:
  LayerSpec spec_;
  Tensor w_, b_, x_;
  std::vector<double> wt_;  // cached W^T
  uint64_t wt_stamp_ = 0;
};

// ---- Flatten ---------------------------------------------------------------

class Flatten final : public Layer {
 public:
  explicit Flatten(LayerSpec spec) : spec_(spec) {}

  const LayerSpec& spec() const override { return spec_; }

  Tensor forward(const Tensor& x, bool) override {
    expects(x.ndim() >= 2, "Flatten: need at least 2 dims");
    in_shape_ = x.shape;
    int64_t rest = 1;
    for (int i = 1; i < x.ndim(); ++i) rest *= x.dim(i);
    Tensor y = x;
    y.shape = {x.dim(0), static_cast<int>(rest)};
    y.requires_grad = false;
    y.grad.clear();
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    dx.shape = in_shape_;
    return dx;
  }

 private:
  LayerSpec spec_;
  std::vector<int> in_shape_;
};

inline std::unique_ptr<Layer> make_layer(const LayerSpec& spec, SplitMix64& rng) {
  switch (spec.kind) {
    case LayerSpec::Kind::Conv2d: return std::make_unique<Conv2d>(spec, rng);
    case LayerSpec::Kind::BatchNorm2d: return std::make_unique<BatchNorm2d>(spec);
    case LayerSpec::Kind::LeakyReLU: return std::make_unique<LeakyReLU>(spec);
    case LayerSpec::Kind::Linear: return std::make_unique<Linear>(spec, rng);
    case LayerSpec::Kind::Flatten: return std::make_unique<Flatten>(spec);
  }
  throw ContractViolation("make_layer: bad spec kind");
}

// Output shape of a spec chain applied to the given input shape, without
// instantiating parameters. Throws when the chain does not compose.
inline std::vector<int> chain_output_shape(const std::vector<LayerSpec>& chain, std::vector<int> shape) {
  for (const auto& s : chain) {
    switch (s.kind) {
      case LayerSpec::Kind::Conv2d: {
        expects(shape.size() == 4 && shape[1] == s.in_ch, "chain: conv input mismatch");
        int h = shape[2], w = shape[3];
        if (s.pad == PadMode::Valid) {
          h = h - s.kh + 1;
          w = w - s.kw + 1;
          expects(h >= 1 && w >= 1, "chain: conv output collapsed");
        }
        shape = {shape[0], s.out_ch, h, w};
        break;
      }
      case LayerSpec::Kind::BatchNorm2d:
        expects(shape.size() == 4 && shape[1] == s.in_ch, "chain: batchnorm channel mismatch");
        break;
      case LayerSpec::Kind::LeakyReLU:
        break;
      case LayerSpec::Kind::Linear:
        expects(shape.size() == 2 && shape[1] == s.in_features, "chain: linear input mismatch");
        shape = {shape[0], s.out_features};
        break;
      case LayerSpec::Kind::Flatten: {
        int64_t rest = 1;
        for (size_t i = 1; i < shape.size(); ++i) rest *= shape[i];
        shape = {shape[0], static_cast<int>(rest)};
        break;
      }
    }
  }
  return shape;
}

}  // namespace gaggle
