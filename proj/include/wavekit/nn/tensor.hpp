#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wavekit::nn {

/// Storage aligned for the widest vector unit, so that vectorised kernels take the same path
/// for every allocation.
template <class T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

/// Channels-first feature map (channels x height x width), row-major within a channel.
template <class T>
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  Buffer<T> v;

  Tensor() = default;
  Tensor(int channels, int height, int width)
      : c(channels), h(height), w(width), v(static_cast<std::size_t>(channels) * height * width) {}

  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  [[nodiscard]] std::size_t size() const { return v.size(); }
  T* channel(int k) { return v.data() + k * plane(); }
  const T* channel(int k) const { return v.data() + k * plane(); }
  T& at(int k, int y, int x) { return v[k * plane() + static_cast<std::size_t>(y) * w + x]; }
  T at(int k, int y, int x) const { return v[k * plane() + static_cast<std::size_t>(y) * w + x]; }

  [[nodiscard]] bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
  [[nodiscard]] std::string shape() const {
    return "(" + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
  }
  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

template <class T>
Tensor<T> zeros_like(const Tensor<T>& t) {
  return Tensor<T>(t.c, t.h, t.w);
}

template <class T>
void relu_inplace(Tensor<T>& t) {
  for (T& x : t.v) x = x > T(0) ? x : T(0);
}

/// dy *= (pre > 0), in place.
template <class T>
void relu_backward_inplace(const Tensor<T>& pre, Tensor<T>& dy) {
  for (std::size_t i = 0; i < dy.v.size(); ++i)
    if (!(pre.v[i] > T(0))) dy.v[i] = T(0);
}

template <class T>
void add_inplace(Tensor<T>& y, const Tensor<T>& x) {
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
}

template <class T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument("concat: " + a.shape() + " vs " + b.shape());
  Tensor<T> out(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

/// Inverse of concat for gradients: first `ca` channels to a, the rest to b.
template <class T>
void split(const Tensor<T>& ab, int ca, Tensor<T>& a, Tensor<T>& b) {
  a = Tensor<T>(ca, ab.h, ab.w);
  b = Tensor<T>(ab.c - ca, ab.h, ab.w);
  std::copy(ab.v.begin(), ab.v.begin() + static_cast<std::ptrdiff_t>(a.size()), a.v.begin());
  std::copy(ab.v.begin() + static_cast<std::ptrdiff_t>(a.size()), ab.v.end(), b.v.begin());
}

/// Nearest-neighbour upsampling onto an (h, w) grid: fine (y, x) reads coarse (y/2, x/2).
template <class T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int h, int w) {
  if ((h + 1) / 2 != x.h || (w + 1) / 2 != x.w)
    throw std::invalid_argument("upsample: " + x.shape() + " does not coarsen " + std::to_string(h) +
                                "x" + std::to_string(w));
  Tensor<T> out(x.c, h, w);
  for (int k = 0; k < x.c; ++k)
    for (int y = 0; y < h; ++y)
      for (int i = 0; i < w; ++i) out.at(k, y, i) = x.at(k, y / 2, i / 2);
  return out;
}

template <class T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& dy, int hc, int wc) {
  Tensor<T> dx(dy.c, hc, wc);
  for (int k = 0; k < dy.c; ++k)
    for (int y = 0; y < dy.h; ++y)
      for (int i = 0; i < dy.w; ++i) dx.at(k, y / 2, i / 2) += dy.at(k, y, i);
  return dx;
}

}  // namespace wavekit::nn
