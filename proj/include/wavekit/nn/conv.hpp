#pragma once

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <vector>

#include "wavekit/nn/tensor.hpp"

namespace wavekit::nn {

/// 3x3 convolution with zero padding 1 and stride 1 or 2. Parameters live in a flat vector:
/// weights [cout][cin][3][3] at `offset`, then cout biases.
struct ConvSpec {
  int cin = 0;
  int cout = 0;
  int stride = 1;
  std::size_t offset = 0;

  [[nodiscard]] std::size_t weight_count() const { return static_cast<std::size_t>(cout) * cin * 9; }
  [[nodiscard]] std::size_t count() const { return weight_count() + cout; }
  [[nodiscard]] int out_h(int h) const { return stride == 1 ? h : (h - 1) / 2 + 1; }
  [[nodiscard]] int out_w(int w) const { return stride == 1 ? w : (w - 1) / 2 + 1; }
};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
void im2col(const Tensor<T>& x, int stride, int ho, int wo, Buffer<T>& col) {
  const std::size_t np = static_cast<std::size_t>(ho) * wo;
  col.assign(static_cast<std::size_t>(x.c) * 9 * np, T(0));
  for (int ci = 0; ci < x.c; ++ci) {
    const T* src = x.channel(ci);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * np;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= x.h) continue;
          const T* row = src + static_cast<std::size_t>(iy) * x.w;
          T* out = dst + static_cast<std::size_t>(oy) * wo;
          if (stride == 1) {
            const int lo = kx == 0 ? 1 : 0, hi = kx == 2 ? wo - 1 : wo;
            for (int ox = lo; ox < hi; ++ox) out[ox] = row[ox + kx - 1];
          } else {
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - 1;
              if (ix >= 0 && ix < x.w) out[ox] = row[ix];
            }
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const Buffer<T>& col, int stride, int ho, int wo, Tensor<T>& dx) {
  const std::size_t np = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < dx.c; ++ci) {
    T* dst = dx.channel(ci);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * np;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= dx.h) continue;
          T* row = dst + static_cast<std::size_t>(iy) * dx.w;
          const T* in = src + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix >= 0 && ix < dx.w) row[ix] += in[ox];
          }
        }
      }
    }
  }
}

/// Saved state for the backward pass of one convolution.
template <class T>
struct ConvTape {
  Buffer<T> col;
  int h = 0, w = 0;  // input spatial shape
};

template <class T>
Tensor<T> conv_forward(const ConvSpec& s, const T* params, const Tensor<T>& x, ConvTape<T>* tape) {
  if (x.c != s.cin) {
    throw std::invalid_argument("conv: expected " + std::to_string(s.cin) + " input channels, got " +
                                x.shape());
  }
  const int ho = s.out_h(x.h), wo = s.out_w(x.w);
  const Eigen::Index np = static_cast<Eigen::Index>(ho) * wo;
  Buffer<T> local;
  Buffer<T>& col = tape ? tape->col : local;
  im2col(x, s.stride, ho, wo, col);
  if (tape) {
    tape->h = x.h;
    tape->w = x.w;
  }
  Tensor<T> y(s.cout, ho, wo);
  const RowMat<T> W = Eigen::Map<const RowMat<T>>(params + s.offset, s.cout, s.cin * 9);
  Eigen::Map<const RowMat<T>> C(col.data(), s.cin * 9, np);
  Eigen::Map<RowMat<T>> Y(y.v.data(), s.cout, np);
  Y.noalias() = W * C;
  const T* b = params + s.offset + s.weight_count();
  for (int k = 0; k < s.cout; ++k) Y.row(k).array() += b[k];
  return y;
}

/// Accumulates parameter gradients into `grads` and, when `dx` is non-null, returns the
/// input gradient in *dx.
template <class T>
void conv_backward(const ConvSpec& s, const T* params, T* grads, const ConvTape<T>& tape,
                   const Tensor<T>& dy, Tensor<T>* dx) {
  const int ho = dy.h, wo = dy.w;
  const Eigen::Index np = static_cast<Eigen::Index>(ho) * wo;
  Eigen::Map<const RowMat<T>> DY(dy.v.data(), s.cout, np);
  Eigen::Map<const RowMat<T>> C(tape.col.data(), s.cin * 9, np);
  const RowMat<T> gw = DY * C.transpose();
  Eigen::Map<RowMat<T>>(grads + s.offset, s.cout, s.cin * 9) += gw;
  T* gb = grads + s.offset + s.weight_count();
  for (int k = 0; k < s.cout; ++k) gb[k] += DY.row(k).sum();
  if (dx) {
    const RowMat<T> W = Eigen::Map<const RowMat<T>>(params + s.offset, s.cout, s.cin * 9);
    Buffer<T> dcol(static_cast<std::size_t>(s.cin) * 9 * np);
    Eigen::Map<RowMat<T>> DC(dcol.data(), s.cin * 9, np);
    DC.noalias() = W.transpose() * DY;
    *dx = Tensor<T>(s.cin, tape.h, tape.w);
    col2im_add(dcol, s.stride, ho, wo, *dx);
  }
}

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
template <class T, class Rng>
void he_uniform_init(const ConvSpec& s, T* params, Rng& rng) {
  const double bound = std::sqrt(6.0 / (s.cin * 9.0));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (std::size_t i = 0; i < s.weight_count(); ++i) params[s.offset + i] = static_cast<T>(u(rng));
  for (int k = 0; k < s.cout; ++k) params[s.offset + s.weight_count() + k] = T(0);
}

}  // namespace wavekit::nn
