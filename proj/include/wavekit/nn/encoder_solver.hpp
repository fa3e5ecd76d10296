#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavekit/nn/conv.hpp"
#include "wavekit/nn/tensor.hpp"

namespace wavekit::nn {

struct Architecture {
  int levels = 3;
  int base_width = 8;
  int blocks = 2;  // residual blocks per level on the way down

  [[nodiscard]] int width(int level) const { return base_width << level; }
  void validate() const {
    if (levels < 1 || levels > 8) throw std::invalid_argument("Architecture: levels must be in [1, 8]");
    if (base_width < 1) throw std::invalid_argument("Architecture: base_width must be >= 1");
    if (blocks < 1) throw std::invalid_argument("Architecture: blocks must be >= 1");
  }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ResSpec {
  ConvSpec a, b;
};

/// Layer table of one U-Net. The encoder variant (fuse = false) maps m to per-level feature
/// maps; the solver variant concatenates the encoder's maps at every level and ends with an
/// output convolution.
struct UNetSpec {
  Architecture arch;
  int in_channels = 1;
  int out_channels = 0;  // 0: no output convolution
  bool fuse = false;
  std::vector<ConvSpec> entry;            // level 0: input conv; level l > 0: stride-2 down conv
  std::vector<ConvSpec> fuse_conv;        // per level, when fuse
  std::vector<std::vector<ResSpec>> down;  // per level, arch.blocks residual blocks
  std::vector<ConvSpec> up;               // index l < levels-1: conv at level l+1 producing width(l)
  std::vector<ConvSpec> merge;            // index l: conv on concat(up, skip) at level l
  std::vector<ResSpec> up_res;            // index l
  ConvSpec out;
  std::size_t count = 0;

  UNetSpec() = default;
  UNetSpec(const Architecture& a, int in_ch, int out_ch, bool with_fuse)
      : arch(a), in_channels(in_ch), out_channels(out_ch), fuse(with_fuse) {
    arch.validate();
    auto add = [this](int cin, int cout, int stride) {
      ConvSpec s{cin, cout, stride, count};
      count += s.count();
      return s;
    };
    const int L = arch.levels;
    for (int l = 0; l < L; ++l) {
      const int c = arch.width(l);
      entry.push_back(l == 0 ? add(in_channels, c, 1) : add(arch.width(l - 1), c, 2));
      if (fuse) fuse_conv.push_back(add(2 * c, c, 1));
      std::vector<ResSpec> blocks;
      for (int k = 0; k < arch.blocks; ++k) {
        ResSpec r;
        r.a = add(c, c, 1);
        r.b = add(c, c, 1);
        blocks.push_back(r);
      }
      down.push_back(std::move(blocks));
    }
    up.resize(L > 1 ? L - 1 : 0);
    merge.resize(up.size());
    up_res.resize(up.size());
    for (int l = L - 2; l >= 0; --l) {
      const int c = arch.width(l);
      up[l] = add(arch.width(l + 1), c, 1);
      merge[l] = add(2 * c, c, 1);
      up_res[l].a = add(c, c, 1);
      up_res[l].b = add(c, c, 1);
    }
    if (out_channels > 0) out = add(arch.width(0), out_channels, 1);
  }

  [[nodiscard]] std::vector<ConvSpec> convs() const {
    std::vector<ConvSpec> all;
    for (std::size_t l = 0; l < entry.size(); ++l) {
      all.push_back(entry[l]);
      if (fuse) all.push_back(fuse_conv[l]);
      for (const ResSpec& r : down[l]) {
        all.push_back(r.a);
        all.push_back(r.b);
      }
    }
    for (int l = static_cast<int>(up.size()) - 1; l >= 0; --l) {
      all.push_back(up[l]);
      all.push_back(merge[l]);
      all.push_back(up_res[l].a);
      all.push_back(up_res[l].b);
    }
    if (out_channels > 0) all.push_back(out);
    return all;
  }
};

template <class T>
struct ResTape {
  ConvTape<T> a, b;
  Tensor<T> pre;
};

template <class T>
struct UNetTape {
  std::vector<ConvTape<T>> entry, fuse;
  std::vector<Tensor<T>> entry_pre, fuse_pre;
  std::vector<std::vector<ResTape<T>>> down;
  std::vector<ConvTape<T>> up, merge;
  std::vector<Tensor<T>> merge_pre;
  std::vector<ResTape<T>> up_res;
  ConvTape<T> out;
};

template <class T>
Tensor<T> res_forward(const ResSpec& s, const T* p, Tensor<T> x, ResTape<T>* tape) {
  Tensor<T> a = conv_forward(s.a, p, x, tape ? &tape->a : nullptr);
  if (tape) tape->pre = a;
  relu_inplace(a);
  Tensor<T> b = conv_forward(s.b, p, a, tape ? &tape->b : nullptr);
  add_inplace(x, b);
  return x;
}

template <class T>
Tensor<T> res_backward(const ResSpec& s, const T* p, T* g, const ResTape<T>& tape, Tensor<T> dy) {
  Tensor<T> dh;
  conv_backward(s.b, p, g, tape.b, dy, &dh);
  relu_backward_inplace(tape.pre, dh);
  Tensor<T> dx;
  conv_backward(s.a, p, g, tape.a, dh, &dx);
  add_inplace(dy, dx);
  return dy;
}

template <class T>
struct UNetOutput {
  std::vector<Tensor<T>> features;  // decoder output per level (bottom level: encoder output)
  Tensor<T> out;                    // output convolution of features[0], when present
};

template <class T>
UNetOutput<T> unet_forward(const UNetSpec& s, const T* p, const Tensor<T>& x,
                           const std::vector<Tensor<T>>* ctx, UNetTape<T>* tape) {
  const int L = s.arch.levels;
  if (s.fuse && (!ctx || static_cast<int>(ctx->size()) != L))
    throw std::invalid_argument("solver network: context has the wrong number of levels");
  if (tape) {
    tape->entry.assign(L, {});
    tape->entry_pre.assign(L, {});
    tape->fuse.assign(s.fuse ? L : 0, {});
    tape->fuse_pre.assign(s.fuse ? L : 0, {});
    tape->down.assign(L, std::vector<ResTape<T>>(s.arch.blocks));
    tape->up.assign(L - 1, {});
    tape->merge.assign(L - 1, {});
    tape->merge_pre.assign(L - 1, {});
    tape->up_res.assign(L - 1, {});
  }
  std::vector<Tensor<T>> skip(L);
  for (int l = 0; l < L; ++l) {
    const Tensor<T>& in = l == 0 ? x : skip[l - 1];
    Tensor<T> d = conv_forward(s.entry[l], p, in, tape ? &tape->entry[l] : nullptr);
    if (tape) tape->entry_pre[l] = d;
    relu_inplace(d);
    if (s.fuse) {
      const Tensor<T>& z = (*ctx)[l];
      if (z.h != d.h || z.w != d.w || z.c != d.c)
        throw std::invalid_argument("solver network: context level " + std::to_string(l) + " has shape " +
                                    z.shape() + ", expected " + d.shape());
      d = conv_forward(s.fuse_conv[l], p, concat(d, z), tape ? &tape->fuse[l] : nullptr);
      if (tape) tape->fuse_pre[l] = d;
      relu_inplace(d);
    }
    for (int k = 0; k < s.arch.blocks; ++k)
      d = res_forward(s.down[l][k], p, std::move(d), tape ? &tape->down[l][k] : nullptr);
    skip[l] = std::move(d);
  }
  UNetOutput<T> result;
  result.features.resize(L);
  result.features[L - 1] = skip[L - 1];
  for (int l = L - 2; l >= 0; --l) {
    Tensor<T> u = conv_forward(s.up[l], p, result.features[l + 1], tape ? &tape->up[l] : nullptr);
    Tensor<T> up = upsample_nearest(u, skip[l].h, skip[l].w);
    Tensor<T> g = conv_forward(s.merge[l], p, concat(up, skip[l]), tape ? &tape->merge[l] : nullptr);
    if (tape) tape->merge_pre[l] = g;
    relu_inplace(g);
    result.features[l] = res_forward(s.up_res[l], p, std::move(g), tape ? &tape->up_res[l] : nullptr);
  }
  if (s.out_channels > 0) result.out = conv_forward(s.out, p, result.features[0], tape ? &tape->out : nullptr);
  return result;
}

/// Reverse pass. `d_features[l]` (may be empty tensors) are gradients on the per-level
/// features, `d_out` on the output map. Returns context gradients when the net fuses context.
template <class T>
std::vector<Tensor<T>> unet_backward(const UNetSpec& s, const T* p, T* g, const UNetTape<T>& tape,
                                     const UNetOutput<T>& fwd, std::vector<Tensor<T>> d_features,
                                     const Tensor<T>* d_out) {
  const int L = s.arch.levels;
  d_features.resize(L);
  auto accumulate = [](Tensor<T>& acc, const Tensor<T>& x) {
    if (acc.v.empty())
      acc = x;
    else
      add_inplace(acc, x);
  };
  if (s.out_channels > 0 && d_out) {
    Tensor<T> dx;
    conv_backward(s.out, p, g, tape.out, *d_out, &dx);
    accumulate(d_features[0], dx);
  }
  std::vector<Tensor<T>> dskip(L);
  for (int l = 0; l <= L - 2; ++l) {
    Tensor<T> df = d_features[l].v.empty() ? zeros_like(fwd.features[l]) : d_features[l];
    Tensor<T> dg = res_backward(s.up_res[l], p, g, tape.up_res[l], std::move(df));
    relu_backward_inplace(tape.merge_pre[l], dg);
    Tensor<T> dcat;
    conv_backward(s.merge[l], p, g, tape.merge[l], dg, &dcat);
    Tensor<T> dup, ds;
    split(dcat, s.arch.width(l), dup, ds);
    accumulate(dskip[l], ds);
    const Tensor<T> du = upsample_nearest_backward(dup, fwd.features[l + 1].h, fwd.features[l + 1].w);
    Tensor<T> dprev;
    conv_backward(s.up[l], p, g, tape.up[l], du, &dprev);
    accumulate(d_features[l + 1], dprev);
  }
  if (!d_features[L - 1].v.empty()) accumulate(dskip[L - 1], d_features[L - 1]);

  std::vector<Tensor<T>> dctx(s.fuse ? L : 0);
  for (int l = L - 1; l >= 0; --l) {
    Tensor<T> d = dskip[l].v.empty() ? zeros_like(fwd.features[l]) : std::move(dskip[l]);
    for (int k = s.arch.blocks - 1; k >= 0; --k) d = res_backward(s.down[l][k], p, g, tape.down[l][k], std::move(d));
    if (s.fuse) {
      relu_backward_inplace(tape.fuse_pre[l], d);
      Tensor<T> dcat;
      conv_backward(s.fuse_conv[l], p, g, tape.fuse[l], d, &dcat);
      split(dcat, s.arch.width(l), d, dctx[l]);
    }
    relu_backward_inplace(tape.entry_pre[l], d);
    if (l > 0) {
      Tensor<T> dx;
      conv_backward(s.entry[l], p, g, tape.entry[l], d, &dx);
      accumulate(dskip[l - 1], dx);
    } else {
      conv_backward(s.entry[l], p, g, tape.entry[l], d, static_cast<Tensor<T>*>(nullptr));
    }
  }
  return dctx;
}

/// Encoder-solver pair with parameters stored as two flat vectors in declaration order.
template <class T>
class EncoderSolver {
 public:
  static constexpr int kSolverInputs = 3;   // re r, im r, gamma
  static constexpr int kSolverOutputs = 2;  // re e, im e

  EncoderSolver() : EncoderSolver(Architecture{}) {}
  explicit EncoderSolver(const Architecture& arch)
      : arch_(arch),
        enc_(arch, 1, 0, false),
        sol_(arch, kSolverInputs, kSolverOutputs, true),
        theta_e_(enc_.count, T(0)),
        theta_s_(sol_.count, T(0)) {}

  [[nodiscard]] const Architecture& arch() const { return arch_; }
  [[nodiscard]] const UNetSpec& encoder_spec() const { return enc_; }
  [[nodiscard]] const UNetSpec& solver_spec() const { return sol_; }
  std::vector<T>& encoder_params() { return theta_e_; }
  std::vector<T>& solver_params() { return theta_s_; }
  [[nodiscard]] const std::vector<T>& encoder_params() const { return theta_e_; }
  [[nodiscard]] const std::vector<T>& solver_params() const { return theta_s_; }

  /// He-uniform everywhere except the closing conv of each residual branch and the output
  /// conv, which start at zero: every block begins as the identity and the initial estimate is 0.
  template <class Rng>
  void init(Rng& rng) {
    init_unet(enc_, theta_e_.data(), rng);
    init_unet(sol_, theta_s_.data(), rng);
  }

  template <class U>
  [[nodiscard]] EncoderSolver<U> cast() const {
    EncoderSolver<U> out(arch_);
    for (std::size_t i = 0; i < theta_e_.size(); ++i) out.encoder_params()[i] = static_cast<U>(theta_e_[i]);
    for (std::size_t i = 0; i < theta_s_.size(); ++i) out.solver_params()[i] = static_cast<U>(theta_s_[i]);
    return out;
  }

  [[nodiscard]] bool finite() const {
    for (T v : theta_e_)
      if (!std::isfinite(v)) return false;
    for (T v : theta_s_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Context maps (one per level) of a 1-channel medium image.
  std::vector<Tensor<T>> encode(const Tensor<T>& medium, UNetTape<T>* tape = nullptr,
                                UNetOutput<T>* keep = nullptr) const {
    if (medium.c != 1) throw std::invalid_argument("encoder: expected a 1-channel input, got " + medium.shape());
    UNetOutput<T> o = unet_forward(enc_, theta_e_.data(), medium, static_cast<const std::vector<Tensor<T>>*>(nullptr), tape);
    if (keep) *keep = o;
    return std::move(o.features);
  }

  Tensor<T> solve(const Tensor<T>& input, const std::vector<Tensor<T>>& ctx, UNetTape<T>* tape = nullptr,
                  UNetOutput<T>* keep = nullptr) const {
    if (input.c != kSolverInputs)
      throw std::invalid_argument("solver: expected 3 input channels, got " + input.shape());
    UNetOutput<T> o = unet_forward(sol_, theta_s_.data(), input, &ctx, tape);
    Tensor<T> out = o.out;
    if (keep) *keep = std::move(o);
    return out;
  }

  /// Accumulates solver gradients; returns gradients on the context maps.
  std::vector<Tensor<T>> solve_backward(const UNetTape<T>& tape, const UNetOutput<T>& fwd, const Tensor<T>& d_out,
                                        std::vector<T>& g_s) const {
    return unet_backward(sol_, theta_s_.data(), g_s.data(), tape, fwd, {}, &d_out);
  }

  void encode_backward(const UNetTape<T>& tape, const UNetOutput<T>& fwd, std::vector<Tensor<T>> d_ctx,
                       std::vector<T>& g_e) const {
    unet_backward(enc_, theta_e_.data(), g_e.data(), tape, fwd, std::move(d_ctx), static_cast<const Tensor<T>*>(nullptr));
  }

 private:
  template <class Rng>
  static void init_unet(const UNetSpec& spec, T* p, Rng& rng) {
    for (const ConvSpec& c : spec.convs()) he_uniform_init(c, p, rng);
    auto zero = [p](const ConvSpec& c) { std::fill(p + c.offset, p + c.offset + c.count(), T(0)); };
    for (const auto& level : spec.down)
      for (const ResSpec& r : level) zero(r.b);
    for (const ResSpec& r : spec.up_res) zero(r.b);
    if (spec.out_channels > 0) zero(spec.out);
  }

  Architecture arch_;
  UNetSpec enc_, sol_;
  std::vector<T> theta_e_, theta_s_;
};

}  // namespace wavekit::nn
