#pragma once

#include <algorithm>
#include <cstring>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gaggle/common.hpp"

namespace gaggle {

// Dense row-major double tensor. Gradient storage lives next to the data so
// layers and optimizers can work on (data, grad) pairs without a graph.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // same length as data when requires_grad
  // Bumped by every writer of data (optimizers, sync, checkpoint load; bump
  // manually after poking data directly) so layers can cache derived views.
  uint64_t version = 1;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
  }

  static int64_t numel_of(const std::vector<int>& shp) {
    int64_t n = 1;
    for (int d : shp) {
      expects(d >= 0, "Tensor: negative extent");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> shp) { return Tensor(std::move(shp)); }

  static Tensor full(std::vector<int> shp, double v) {
    Tensor t(std::move(shp));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor from(std::vector<int> shp, std::vector<double> values) {
    Tensor t;
    t.shape = std::move(shp);
    expects(static_cast<int64_t>(values.size()) == numel_of(t.shape),
            "Tensor::from: value count does not match shape");
    t.data = std::move(values);
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

  void set_requires_grad(bool b) {
    requires_grad = b;
    if (b)
      grad.assign(data.size(), 0.0);
    else
      grad.clear();
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// ---- parallel helper ----------------------------------------------------
//
// Every parallel loop in the engine iterates over indices whose results are
// written to disjoint locations, with any reduction kept serial inside one
// index. Outputs are therefore bitwise identical for every thread count.

template <class F>
inline void parallel_for(int n, F&& f) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) f(i);
#else
  for (int i = 0; i < n; ++i) f(i);
#endif
}

// ---- dense kernels -------------------------------------------------------
//
// All three kernels keep the innermost loop as y[j] += a * x[j] over
// contiguous rows, which vectorizes without reassociating any reduction.

inline void axpy(int n, double a, const double* x, double* y) {
  for (int j = 0; j < n; ++j) y[j] += a * x[j];
}

namespace kernel {

// Explicit 8-lane double vectors; gcc/clang legalize these to the best SIMD
// available at the chosen -march, so the tiles below never fall back to the
// scalar code the auto-vectorizer tends to produce here. Everything is
// inline within one TU, so the vector-ABI warning does not apply.
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wpsabi"
typedef double vd8 __attribute__((vector_size(64)));

inline vd8 load8(const double* p) {
  vd8 v;
  std::memcpy(&v, p, 64);
  return v;
}
inline void store8(double* p, vd8 v) { std::memcpy(p, &v, 64); }
inline vd8 splat8(double x) { return vd8{x, x, x, x, x, x, x, x}; }
#pragma GCC diagnostic pop

}  // namespace kernel

namespace kernel {

// One k-chunk x n-chunk pass of C[M x N] += A[M x K] B[K x N]. Four C rows
// are held in vector registers across the k-chunk; every B row load feeds
// four fused multiply-adds. Accumulation order per C element is k-ascending,
// so chunked and unchunked runs produce bitwise identical results.
inline void nn_block(const double* A, const double* B, double* C, int K, int N, int M, int k0,
                     int kt, int n0, int nt) {
  int i = 0;
  for (; i + 4 <= M; i += 4) {
    const double* a0 = A + static_cast<size_t>(i) * K + k0;
    const double* a1 = a0 + K;
    const double* a2 = a1 + K;
    const double* a3 = a2 + K;
    double* c0 = C + static_cast<size_t>(i) * N;
    double* c1 = c0 + N;
    double* c2 = c1 + N;
    double* c3 = c2 + N;
    int j = n0;
    for (; j + 8 <= n0 + nt; j += 8) {
      vd8 t0 = load8(c0 + j), t1 = load8(c1 + j), t2 = load8(c2 + j), t3 = load8(c3 + j);
      const double* b = B + static_cast<size_t>(k0) * N + j;
      for (int k = 0; k < kt; ++k, b += N) {
        const vd8 bv = load8(b);
        t0 += splat8(a0[k]) * bv;
        t1 += splat8(a1[k]) * bv;
        t2 += splat8(a2[k]) * bv;
        t3 += splat8(a3[k]) * bv;
      }
      store8(c0 + j, t0);
      store8(c1 + j, t1);
      store8(c2 + j, t2);
      store8(c3 + j, t3);
    }
    for (; j < n0 + nt; ++j) {
      double t0 = c0[j], t1 = c1[j], t2 = c2[j], t3 = c3[j];
      for (int k = 0; k < kt; ++k) {
        const double bv = B[static_cast<size_t>(k0 + k) * N + j];
        t0 += a0[k] * bv;
        t1 += a1[k] * bv;
        t2 += a2[k] * bv;
        t3 += a3[k] * bv;
      }
      c0[j] = t0;
      c1[j] = t1;
      c2[j] = t2;
      c3[j] = t3;
    }
  }
  for (; i < M; ++i) {
    const double* a_row = A + static_cast<size_t>(i) * K + k0;
    double* c_row = C + static_cast<size_t>(i) * N;
    for (int k = 0; k < kt; ++k) {
      double a = a_row[k];
      if (a == 0.0) continue;
      axpy(nt, a, B + static_cast<size_t>(k0 + k) * N + n0, c_row + n0);
    }
  }
}

}  // namespace kernel

// C[M x N] += A[M x K] * B[K x N], tiled so the active B panel stays
// cache-resident instead of streaming per row block.
inline void gemm_nn_acc(const double* A, const double* B, double* C, int M, int K, int N) {
  constexpr int kChunkK = 256;
  constexpr int kChunkN = 512;
  for (int k0 = 0; k0 < K; k0 += kChunkK) {
    const int kt = std::min(kChunkK, K - k0);
    for (int n0 = 0; n0 < N; n0 += kChunkN) {
      const int nt = std::min(kChunkN, N - n0);
      kernel::nn_block(A, B, C, K, N, M, k0, kt, n0, nt);
    }
  }
}

// C[M x N] += A^T * B with A[P x M], B[P x N], restricted to C rows
// [m_begin, m_end). N is tiled so the B panel stays cache-resident; the
// register tiles accumulate over the full p loop.
inline void gemm_tn_acc_rows(const double* A, const double* B, double* C, int P, int M, int N,
                             int m_begin, int m_end) {
  using kernel::load8;
  using kernel::splat8;
  using kernel::store8;
  using kernel::vd8;
  constexpr int kChunkN = 512;
  for (int n0 = 0; n0 < N; n0 += kChunkN) {
    const int nt = std::min(kChunkN, N - n0);
    int m = m_begin;
    for (; m + 4 <= m_end; m += 4) {
      double* c0 = C + static_cast<size_t>(m) * N;
      double* c1 = c0 + N;
      double* c2 = c1 + N;
      double* c3 = c2 + N;
      int j = n0;
      for (; j + 8 <= n0 + nt; j += 8) {
        vd8 t0 = load8(c0 + j), t1 = load8(c1 + j), t2 = load8(c2 + j), t3 = load8(c3 + j);
        for (int p = 0; p < P; ++p) {
          const double* a = A + static_cast<size_t>(p) * M + m;
          const vd8 bv = load8(B + static_cast<size_t>(p) * N + j);
          t0 += splat8(a[0]) * bv;
          t1 += splat8(a[1]) * bv;
          t2 += splat8(a[2]) * bv;
          t3 += splat8(a[3]) * bv;
        }
        store8(c0 + j, t0);
        store8(c1 + j, t1);
        store8(c2 + j, t2);
        store8(c3 + j, t3);
      }
      for (; j < n0 + nt; ++j) {
        double t0 = c0[j], t1 = c1[j], t2 = c2[j], t3 = c3[j];
        for (int p = 0; p < P; ++p) {
          const double* a = A + static_cast<size_t>(p) * M + m;
          const double bv = B[static_cast<size_t>(p) * N + j];
          t0 += a[0] * bv;
          t1 += a[1] * bv;
          t2 += a[2] * bv;
          t3 += a[3] * bv;
        }
        c0[j] = t0;
        c1[j] = t1;
        c2[j] = t2;
        c3[j] = t3;
      }
    }
    for (; m < m_end; ++m) {
      double* c = C + static_cast<size_t>(m) * N;
      for (int p = 0; p < P; ++p) {
        double a = A[static_cast<size_t>(p) * M + m];
        if (a == 0.0) continue;
        axpy(nt, a, B + static_cast<size_t>(p) * N + n0, c + n0);
      }
    }
  }
}

inline void gemm_tn_acc(const double* A, const double* B, double* C, int P, int M, int N) {
  gemm_tn_acc_rows(A, B, C, P, M, N, 0, M);
}

// dst[C x R] = src[R x C], in 32x32 blocks to keep both sides cache-friendly.
inline void transpose(const double* src, double* dst, int R, int C) {
  constexpr int kBlk = 32;
  for (int r0 = 0; r0 < R; r0 += kBlk) {
    const int r1 = std::min(R, r0 + kBlk);
    for (int c0 = 0; c0 < C; c0 += kBlk) {
      const int c1 = std::min(C, c0 + kBlk);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c)
          dst[static_cast<size_t>(c) * R + r] = src[static_cast<size_t>(r) * C + c];
    }
  }
}

}  // namespace gaggle
