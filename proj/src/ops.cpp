#include "litemono/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace litemono {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMapMat = Eigen::Map<const RowMat<S>>;

thread_local MacCounter* g_counter = nullptr;

void require_rank(const Shape& s, std::size_t r, const char* what) {
  if (s.size() != r)
    throw ShapeError(std::string(what) + " expects rank " + std::to_string(r) + ", got " +
                     shape_string(s));
}

Index floor_div(Index a, Index b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
Index ceil_div(Index a, Index b) { return -floor_div(-a, b); }

struct ConvGeometry {
  Index n, cin, h, w, cout, cin_g, cout_g, kh, kw, ho, wo;
};

template <typename S>
void im2col(const S* in, const ConvGeometry& g, const ConvSpec& sp, S* col) {
  const Index plane = g.h * g.w;
  const Index p = g.ho * g.wo;
  for (Index c = 0; c < g.cin_g; ++c)
    for (Index ky = 0; ky < g.kh; ++ky)
      for (Index kx = 0; kx < g.kw; ++kx) {
        S* row = col + ((c * g.kh + ky) * g.kw + kx) * p;
        const S* src = in + c * plane;
        const Index xoff = kx * sp.dilation - sp.padding;
        const Index ox_lo = std::clamp<Index>(ceil_div(-xoff, sp.stride), 0, g.wo);
        const Index ox_hi = std::clamp<Index>(floor_div(g.w - 1 - xoff, sp.stride) + 1, ox_lo, g.wo);
        for (Index oy = 0; oy < g.ho; ++oy) {
          S* dst = row + oy * g.wo;
          const Index iy = oy * sp.stride - sp.padding + ky * sp.dilation;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, S(0));
            continue;
          }
          std::fill(dst, dst + ox_lo, S(0));
          const S* line = src + iy * g.w + xoff;
          for (Index ox = ox_lo; ox < ox_hi; ++ox) dst[ox] = line[ox * sp.stride];
          std::fill(dst + ox_hi, dst + g.wo, S(0));
        }
      }
}

template <typename S>
void col2im_add(const S* col, const ConvGeometry& g, const ConvSpec& sp, S* out) {
  const Index plane = g.h * g.w;
  const Index p = g.ho * g.wo;
  for (Index c = 0; c < g.cin_g; ++c)
    for (Index ky = 0; ky < g.kh; ++ky)
      for (Index kx = 0; kx < g.kw; ++kx) {
        const S* row = col + ((c * g.kh + ky) * g.kw + kx) * p;
        S* dst = out + c * plane;
        const Index xoff = kx * sp.dilation - sp.padding;
        const Index ox_lo = std::clamp<Index>(ceil_div(-xoff, sp.stride), 0, g.wo);
        const Index ox_hi = std::clamp<Index>(floor_div(g.w - 1 - xoff, sp.stride) + 1, ox_lo, g.wo);
        for (Index oy = 0; oy < g.ho; ++oy) {
          const Index iy = oy * sp.stride - sp.padding + ky * sp.dilation;
          if (iy < 0 || iy >= g.h) continue;
          S* line = dst + iy * g.w + xoff;
          const S* src = row + oy * g.wo;
          for (Index ox = ox_lo; ox < ox_hi; ++ox) line[ox * sp.stride] += src[ox];
        }
      }
}

// Depthwise (one filter per channel) direct kernels on a single plane.
template <typename S>
void depthwise_plane(const S* in, const S* w, const ConvGeometry& g, const ConvSpec& sp, S* out) {
  for (Index ky = 0; ky < g.kh; ++ky)
    for (Index kx = 0; kx < g.kw; ++kx) {
      const S wv = w[ky * g.kw + kx];
      const Index xoff = kx * sp.dilation - sp.padding;
      const Index ox_lo = std::clamp<Index>(ceil_div(-xoff, sp.stride), 0, g.wo);
      const Index ox_hi = std::clamp<Index>(floor_div(g.w - 1 - xoff, sp.stride) + 1, ox_lo, g.wo);
      for (Index oy = 0; oy < g.ho; ++oy) {
        const Index iy = oy * sp.stride - sp.padding + ky * sp.dilation;
        if (iy < 0 || iy >= g.h) continue;
        const S* line = in + iy * g.w + xoff;
        S* dst = out + oy * g.wo;
        if (sp.stride == 1) {
          for (Index ox = ox_lo; ox < ox_hi; ++ox) dst[ox] += wv * line[ox];
        } else {
          for (Index ox = ox_lo; ox < ox_hi; ++ox) dst[ox] += wv * line[ox * sp.stride];
        }
      }
    }
}

template <typename S>
void depthwise_plane_backward(const S* in, const S* w, const S* gout, const ConvGeometry& g,
                              const ConvSpec& sp, S* gin, S* gw) {
  for (Index ky = 0; ky < g.kh; ++ky)
    for (Index kx = 0; kx < g.kw; ++kx) {
      const S wv = w[ky * g.kw + kx];
      S acc = 0;
      const Index xoff = kx * sp.dilation - sp.padding;
      const Index ox_lo = std::clamp<Index>(ceil_div(-xoff, sp.stride), 0, g.wo);
      const Index ox_hi = std::clamp<Index>(floor_div(g.w - 1 - xoff, sp.stride) + 1, ox_lo, g.wo);
      for (Index oy = 0; oy < g.ho; ++oy) {
        const Index iy = oy * sp.stride - sp.padding + ky * sp.dilation;
        if (iy < 0 || iy >= g.h) continue;
        const Index base = iy * g.w + xoff;
        const S* go = gout + oy * g.wo;
        for (Index ox = ox_lo; ox < ox_hi; ++ox) {
          const Index ix = base + ox * sp.stride;
          if (gin) gin[ix] += wv * go[ox];
          acc += in[ix] * go[ox];
        }
      }
      if (gw) gw[ky * g.kw + kx] += acc;
    }
}

}  // namespace

// ---------------------------------------------------------------------------

MacCounter::MacCounter() : previous_(g_counter) { g_counter = this; }
MacCounter::~MacCounter() {
  g_counter = previous_;
  if (previous_) previous_->macs_ += macs_;
}
void MacCounter::record(Index macs) {
  if (g_counter) g_counter->macs_ += macs;
}

template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& weight,
                 const std::optional<std::type_identity_t<Tensor<S>>>& bias, const ConvSpec& spec) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  ConvGeometry g{};
  g.n = input.dim(0);
  g.cin = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = weight.dim(0);
  g.cin_g = weight.dim(1);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  if (spec.groups < 1 || spec.stride < 1 || spec.dilation < 1 || spec.padding < 0)
    throw ShapeError("conv2d: stride, dilation and groups must be positive, padding non-negative");
  if (g.kh != spec.kernel_h || g.kw != spec.kernel_w)
    throw ShapeError("conv2d: weight kernel " + shape_string(weight.shape()) +
                     " disagrees with spec kernel " + std::to_string(spec.kernel_h) + "x" +
                     std::to_string(spec.kernel_w));
  if (g.cin % spec.groups != 0 || g.cout % spec.groups != 0)
    throw ShapeError("conv2d: groups " + std::to_string(spec.groups) +
                     " must divide input channels " + std::to_string(g.cin) +
                     " and output channels " + std::to_string(g.cout));
  if (g.cin_g * spec.groups != g.cin)
    throw ShapeError("conv2d: channel axis mismatch, input has " + std::to_string(g.cin) +
                     " channels but weight expects " + std::to_string(g.cin_g * spec.groups));
  if (bias && (bias->rank() != 1 || bias->dim(0) != g.cout))
    throw ShapeError("conv2d: bias shape " + shape_string(bias->shape()) + " != [" +
                     std::to_string(g.cout) + "]");
  g.cout_g = g.cout / spec.groups;
  g.ho = spec.output_size(g.h, g.kh);
  g.wo = spec.output_size(g.w, g.kw);
  if (g.ho < 1 || g.wo < 1)
    throw ShapeError("conv2d: non-positive output size " + std::to_string(g.ho) + "x" +
                     std::to_string(g.wo) + " for input " + shape_string(input.shape()));

  const Index p = g.ho * g.wo;
  const Index plane = g.h * g.w;
  const Index kdim = g.cin_g * g.kh * g.kw;
  MacCounter::record(g.n * g.cout * p * kdim);

  Tensor<S> out({g.n, g.cout, g.ho, g.wo});
  const S* x = input.ptr();
  const S* w = weight.ptr();
  S* y = out.ptr();
  const bool depthwise = spec.groups == g.cin && g.cout == g.cin && g.cin_g == 1;
  const bool pointwise = g.kh == 1 && g.kw == 1 && spec.stride == 1 && spec.padding == 0 &&
                         spec.groups == 1;

  if (depthwise) {
    for (Index n = 0; n < g.n; ++n)
      for (Index c = 0; c < g.cin; ++c)
        depthwise_plane(x + (n * g.cin + c) * plane, w + c * g.kh * g.kw, g, spec,
                        y + (n * g.cout + c) * p);
  } else if (pointwise) {
    ConstMapMat<S> wm(w, g.cout, g.cin);
    for (Index n = 0; n < g.n; ++n) {
      ConstMapMat<S> xm(x + n * g.cin * plane, g.cin, p);
      MapMat<S> ym(y + n * g.cout * p, g.cout, p);
      ym.noalias() = wm * xm;
    }
  } else {
    std::vector<S> col(static_cast<std::size_t>(kdim * p));
    for (Index n = 0; n < g.n; ++n)
      for (Index gr = 0; gr < spec.groups; ++gr) {
        im2col(x + (n * g.cin + gr * g.cin_g) * plane, g, spec, col.data());
        ConstMapMat<S> wm(w + gr * g.cout_g * kdim, g.cout_g, kdim);
        ConstMapMat<S> cm(col.data(), kdim, p);
        MapMat<S> ym(y + (n * g.cout + gr * g.cout_g) * p, g.cout_g, p);
        ym.noalias() = wm * cm;
      }
  }
  if (bias) {
    const S* b = bias->ptr();
    for (Index n = 0; n < g.n; ++n)
      for (Index c = 0; c < g.cout; ++c) {
        S* dst = y + (n * g.cout + c) * p;
        for (Index i = 0; i < p; ++i) dst[i] += b[c];
      }
  }

  std::vector<Tensor<S>> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  detail::attach<S>(out, inputs, [g, spec, depthwise, pointwise, has_bias, p, plane,
                                  kdim](detail::Node<S>& self) {
    const S* x = self.parent_data(0);
    const S* w = self.parent_data(1);
    S* gx = self.parent_grad(0);
    S* gw = self.parent_grad(1);
    S* gb = has_bias ? self.parent_grad(2) : nullptr;
    const S* gy = self.grad.data();
    if (gb)
      for (Index n = 0; n < g.n; ++n)
        for (Index c = 0; c < g.cout; ++c) {
          const S* src = gy + (n * g.cout + c) * p;
          S acc = 0;
          for (Index i = 0; i < p; ++i) acc += src[i];
          gb[c] += acc;
        }
    if (!gx && !gw) return;
    if (depthwise) {
      for (Index n = 0; n < g.n; ++n)
        for (Index c = 0; c < g.cin; ++c)
          depthwise_plane_backward(x + (n * g.cin + c) * plane, w + c * g.kh * g.kw,
                                   gy + (n * g.cout + c) * p, g, spec,
                                   gx ? gx + (n * g.cin + c) * plane : nullptr,
                                   gw ? gw + c * g.kh * g.kw : nullptr);
    } else if (pointwise) {
      ConstMapMat<S> wm(w, g.cout, g.cin);
      for (Index n = 0; n < g.n; ++n) {
        ConstMapMat<S> gym(gy + n * g.cout * p, g.cout, p);
        if (gw) {
          ConstMapMat<S> xm(x + n * g.cin * plane, g.cin, p);
          MapMat<S> gwm(gw, g.cout, g.cin);
          gwm.noalias() += gym * xm.transpose();
        }
        if (gx) {
          MapMat<S> gxm(gx + n * g.cin * plane, g.cin, p);
          gxm.noalias() += wm.transpose() * gym;
        }
      }
    } else {
      std::vector<S> col(static_cast<std::size_t>(kdim * p));
      std::vector<S> gcol(gx ? static_cast<std::size_t>(kdim * p) : 0);
      for (Index n = 0; n < g.n; ++n)
        for (Index gr = 0; gr < spec.groups; ++gr) {
          ConstMapMat<S> gym(gy + (n * g.cout + gr * g.cout_g) * p, g.cout_g, p);
          ConstMapMat<S> wm(w + gr * g.cout_g * kdim, g.cout_g, kdim);
          if (gw) {
            im2col(x + (n * g.cin + gr * g.cin_g) * plane, g, spec, col.data());
            ConstMapMat<S> cm(col.data(), kdim, p);
            MapMat<S> gwm(gw + gr * g.cout_g * kdim, g.cout_g, kdim);
            gwm.noalias() += gym * cm.transpose();
          }
          if (gx) {
            MapMat<S> gcm(gcol.data(), kdim, p);
            gcm.noalias() = wm.transpose() * gym;
            col2im_add(gcol.data(), g, spec, gx + (n * g.cin + gr * g.cin_g) * plane);
          }
        }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, BatchNormState<S>& st, bool training) {
  if (x.rank() < 2) throw ShapeError("batch_norm expects [N, C, ...], got " + shape_string(x.shape()));
  if (!(st.eps > 0)) throw std::invalid_argument("batch_norm: eps must be positive");
  const Index n = x.dim(0), c = x.dim(1);
  Index inner = 1;
  for (int i = 2; i < x.rank(); ++i) inner *= x.dim(i);
  const Index m = n * inner;
  if (m == 0) throw ShapeError("batch_norm over an empty normalization axis");
  if (st.gamma.numel() != c || st.beta.numel() != c)
    throw ShapeError("batch_norm: affine parameters must have " + std::to_string(c) + " entries");

  std::vector<S> mu(c), invstd(c);
  const S* px = x.ptr();
  if (training) {
    S* rm = st.running_mean.ptr();
    S* rv = st.running_var.ptr();
    for (Index ch = 0; ch < c; ++ch) {
      double s = 0;
      for (Index b = 0; b < n; ++b) {
        const S* src = px + (b * c + ch) * inner;
        for (Index i = 0; i < inner; ++i) s += src[i];
      }
      const double mean = s / static_cast<double>(m);
      double v = 0;
      for (Index b = 0; b < n; ++b) {
        const S* src = px + (b * c + ch) * inner;
        for (Index i = 0; i < inner; ++i) {
          const double d = src[i] - mean;
          v += d * d;
        }
      }
      const double var = v / static_cast<double>(m);
      mu[ch] = static_cast<S>(mean);
      invstd[ch] = static_cast<S>(1.0 / std::sqrt(var + st.eps));
      rm[ch] = static_cast<S>((1 - st.momentum) * rm[ch] + st.momentum * mean);
      rv[ch] = static_cast<S>((1 - st.momentum) * rv[ch] + st.momentum * var);
    }
  } else {
    for (Index ch = 0; ch < c; ++ch) {
      mu[ch] = st.running_mean.ptr()[ch];
      invstd[ch] = static_cast<S>(1.0 / std::sqrt(static_cast<double>(st.running_var.ptr()[ch]) + st.eps));
    }
  }
  Tensor<S> out(x.shape());
  const S* gam = st.gamma.ptr();
  const S* bet = st.beta.ptr();
  for (Index b = 0; b < n; ++b)
    for (Index ch = 0; ch < c; ++ch) {
      const S* src = px + (b * c + ch) * inner;
      S* dst = out.ptr() + (b * c + ch) * inner;
      const S scale = gam[ch] * invstd[ch];
      const S shift = bet[ch] - mu[ch] * scale;
      for (Index i = 0; i < inner; ++i) dst[i] = src[i] * scale + shift;
    }
  detail::attach<S>(out, {x, st.gamma, st.beta}, [n, c, inner, m, mu, invstd,
                                                   training](detail::Node<S>& self) {
    const S* px = self.parent_data(0);
    const S* gam = self.parent_data(1);
    S* gx = self.parent_grad(0);
    S* gg = self.parent_grad(1);
    S* gbeta = self.parent_grad(2);
    const S* gy = self.grad.data();
    for (Index ch = 0; ch < c; ++ch) {
      S sum_dy = 0, sum_dy_xhat = 0;
      for (Index b = 0; b < n; ++b) {
        const S* src = px + (b * c + ch) * inner;
        const S* g = gy + (b * c + ch) * inner;
        for (Index i = 0; i < inner; ++i) {
          sum_dy += g[i];
          sum_dy_xhat += g[i] * (src[i] - mu[ch]) * invstd[ch];
        }
      }
      if (gg) gg[ch] += sum_dy_xhat;
      if (gbeta) gbeta[ch] += sum_dy;
      if (!gx) continue;
      const S k = gam[ch] * invstd[ch];
      const S inv_m = S(1) / static_cast<S>(m);
      for (Index b = 0; b < n; ++b) {
        const S* src = px + (b * c + ch) * inner;
        const S* g = gy + (b * c + ch) * inner;
        S* dst = gx + (b * c + ch) * inner;
        for (Index i = 0; i < inner; ++i) {
          if (training) {
            const S xhat = (src[i] - mu[ch]) * invstd[ch];
            dst[i] += k * (g[i] - inv_m * sum_dy - xhat * inv_m * sum_dy_xhat);
          } else {
            dst[i] += k * g[i];
          }
        }
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     int axis, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const int r = x.rank();
  const int ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) throw ShapeError("layer_norm: axis out of range");
  Index outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= x.dim(i);
  for (int i = ax + 1; i < r; ++i) inner *= x.dim(i);
  const Index len = x.dim(ax);
  if (len == 0) throw ShapeError("layer_norm over an empty normalization axis");
  if (gamma.numel() != len || beta.numel() != len)
    throw ShapeError("layer_norm: affine parameters must have " + std::to_string(len) + " entries");

  std::vector<S> mu(outer * inner, S(0)), invstd(outer * inner, S(0));
  Tensor<S> out(x.shape());
  const S* px = x.ptr();
  const S* gm = gamma.ptr();
  const S* bt = beta.ptr();
  const S inv_len = S(1) / static_cast<S>(len);
  for (Index o = 0; o < outer; ++o) {
    S* m = mu.data() + o * inner;
    S* is = invstd.data() + o * inner;
    const S* base = px + o * len * inner;
    for (Index l = 0; l < len; ++l)
      for (Index i = 0; i < inner; ++i) m[i] += base[l * inner + i];
    for (Index i = 0; i < inner; ++i) m[i] *= inv_len;
    for (Index l = 0; l < len; ++l)
      for (Index i = 0; i < inner; ++i) {
        const S d = base[l * inner + i] - m[i];
        is[i] += d * d;
      }
    for (Index i = 0; i < inner; ++i) is[i] = S(1) / std::sqrt(is[i] * inv_len + static_cast<S>(eps));
    S* dst = out.ptr() + o * len * inner;
    for (Index l = 0; l < len; ++l)
      for (Index i = 0; i < inner; ++i)
        dst[l * inner + i] = (base[l * inner + i] - m[i]) * is[i] * gm[l] + bt[l];
  }
  detail::attach<S>(out, {x, gamma, beta}, [outer, inner, len, mu, invstd,
                                            inv_len](detail::Node<S>& self) {
    const S* px = self.parent_data(0);
    const S* gm = self.parent_data(1);
    S* gx = self.parent_grad(0);
    S* gg = self.parent_grad(1);
    S* gb = self.parent_grad(2);
    const S* gy = self.grad.data();
    std::vector<S> s1(inner), s2(inner);
    for (Index o = 0; o < outer; ++o) {
      const S* m = mu.data() + o * inner;
      const S* is = invstd.data() + o * inner;
      const S* base = px + o * len * inner;
      const S* g = gy + o * len * inner;
      std::fill(s1.begin(), s1.end(), S(0));
      std::fill(s2.begin(), s2.end(), S(0));
      for (Index l = 0; l < len; ++l)
        for (Index i = 0; i < inner; ++i) {
          const Index k = l * inner + i;
          const S xhat = (base[k] - m[i]) * is[i];
          const S dxhat = g[k] * gm[l];
          s1[i] += dxhat;
          s2[i] += dxhat * xhat;
          if (gg) gg[l] += g[k] * xhat;
          if (gb) gb[l] += g[k];
        }
      if (!gx) continue;
      S* dst = gx + o * len * inner;
      for (Index l = 0; l < len; ++l)
        for (Index i = 0; i < inner; ++i) {
          const Index k = l * inner + i;
          const S xhat = (base[k] - m[i]) * is[i];
          const S dxhat = g[k] * gm[l];
          dst[k] += is[i] * (dxhat - inv_len * s1[i] - xhat * inv_len * s2[i]);
        }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {
template <typename S, typename F, typename DF>
Tensor<S> pointwise_activation(const Tensor<S>& x, F f, DF df) {
  Tensor<S> out(x.shape());
  const Index n = x.numel();
  const S* px = x.ptr();
  S* py = out.ptr();
  for (Index i = 0; i < n; ++i) py[i] = f(px[i]);
  detail::attach<S>(out, {x}, [df](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* px = self.parent_data(0);
    const S* py = self.data.data();
    const S* g = self.grad.data();
    const std::size_t n = self.data.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * df(px[i], py[i]);
  });
  return out;
}
}  // namespace

template <typename S>
Tensor<S> gelu(const Tensor<S>& x) {
  constexpr S inv_sqrt2 = S(1) / std::numbers::sqrt2_v<S>;
  constexpr S inv_sqrt2pi = std::numbers::inv_sqrtpi_v<S> * inv_sqrt2;
  return pointwise_activation(
      x, [](S v) { return S(0.5) * v * (S(1) + std::erf(v * inv_sqrt2)); },
      [](S v, S) {
        return S(0.5) * (S(1) + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(S(-0.5) * v * v);
      });
}

template <typename S>
Tensor<S> elu(const Tensor<S>& x, S alpha) {
  return pointwise_activation(
      x, [alpha](S v) { return v > 0 ? v : alpha * std::expm1(v); },
      [alpha](S v, S y) { return v > 0 ? S(1) : y + alpha; });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  return pointwise_activation(
      x,
      [](S v) {
        if (v >= 0) return S(1) / (S(1) + std::exp(-v));
        const S e = std::exp(v);
        return e / (S(1) + e);
      },
      [](S, S y) { return y * (S(1) - y); });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  return pointwise_activation(
      x, [](S v) { return v > 0 ? v : S(0); }, [](S v, S) { return v > 0 ? S(1) : S(0); });
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& x, int axis) {
  const int r = x.rank();
  const int ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) throw ShapeError("softmax: axis " + std::to_string(axis) + " out of range");
  Index outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= x.dim(i);
  for (int i = ax + 1; i < r; ++i) inner *= x.dim(i);
  const Index len = x.dim(ax);
  Tensor<S> out(x.shape());
  const S* px = x.ptr();
  S* py = out.ptr();
  std::vector<S> mx(inner), den(inner);
  for (Index o = 0; o < outer; ++o) {
    const S* base = px + o * len * inner;
    S* dst = py + o * len * inner;
    std::fill(mx.begin(), mx.end(), -std::numeric_limits<S>::infinity());
    std::fill(den.begin(), den.end(), S(0));
    for (Index l = 0; l < len; ++l)
      for (Index i = 0; i < inner; ++i) mx[i] = std::max(mx[i], base[l * inner + i]);
    for (Index l = 0; l < len; ++l)
      for (Index i = 0; i < inner; ++i) {
        dst[l * inner + i] = std::exp(base[l * inner + i] - mx[i]);
        den[i] += dst[l * inner + i];
      }
    for (Index l = 0; l < len; ++l)
      for (Index i = 0; i < inner; ++i) dst[l * inner + i] /= den[i];
  }
  detail::attach<S>(out, {x}, [outer, inner, len](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* py = self.data.data();
    const S* g = self.grad.data();
    std::vector<S> dot(inner);
    for (Index o = 0; o < outer; ++o) {
      const Index off = o * len * inner;
      std::fill(dot.begin(), dot.end(), S(0));
      for (Index l = 0; l < len; ++l)
        for (Index i = 0; i < inner; ++i) dot[i] += py[off + l * inner + i] * g[off + l * inner + i];
      for (Index l = 0; l < len; ++l)
        for (Index i = 0; i < inner; ++i) {
          const Index k = off + l * inner + i;
          gx[k] += py[k] * (g[k] - dot[i]);
        }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {
struct LerpTable {
  std::vector<Index> lo, hi;
  std::vector<double> frac;
};

LerpTable lerp_table(Index in, Index out) {
  LerpTable t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    Index i0 = static_cast<Index>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    t.lo[o] = i0;
    t.hi[o] = std::min(i0 + 1, in - 1);
    t.frac[o] = src - static_cast<double>(i0);
  }
  return t;
}
}  // namespace

template <typename S>
Tensor<S> resize_bilinear(const Tensor<S>& x, Index out_h, Index out_w) {
  require_rank(x.shape(), 4, "resize_bilinear");
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: target size must be >= 1");
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h == h && out_w == w) return reshape(x, x.shape());
  const LerpTable ty = lerp_table(h, out_h);
  const LerpTable tx = lerp_table(w, out_w);
  Tensor<S> out({n, c, out_h, out_w});
  const S* px = x.ptr();
  S* py = out.ptr();
  for (Index p = 0; p < n * c; ++p) {
    const S* src = px + p * h * w;
    S* dst = py + p * out_h * out_w;
    for (Index oy = 0; oy < out_h; ++oy) {
      const S fy = static_cast<S>(ty.frac[oy]);
      const S* r0 = src + ty.lo[oy] * w;
      const S* r1 = src + ty.hi[oy] * w;
      for (Index ox = 0; ox < out_w; ++ox) {
        const S fx = static_cast<S>(tx.frac[ox]);
        const Index x0 = tx.lo[ox], x1 = tx.hi[ox];
        const S top = r0[x0] * (S(1) - fx) + r0[x1] * fx;
        const S bot = r1[x0] * (S(1) - fx) + r1[x1] * fx;
        dst[oy * out_w + ox] = top * (S(1) - fy) + bot * fy;
      }
    }
  }
  detail::attach<S>(out, {x}, [n, c, h, w, out_h, out_w, ty, tx](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* g = self.grad.data();
    for (Index p = 0; p < n * c; ++p) {
      S* dst = gx + p * h * w;
      const S* src = g + p * out_h * out_w;
      for (Index oy = 0; oy < out_h; ++oy) {
        const S fy = static_cast<S>(ty.frac[oy]);
        S* r0 = dst + ty.lo[oy] * w;
        S* r1 = dst + ty.hi[oy] * w;
        for (Index ox = 0; ox < out_w; ++ox) {
          const S fx = static_cast<S>(tx.frac[ox]);
          const S v = src[oy * out_w + ox];
          const Index x0 = tx.lo[ox], x1 = tx.hi[ox];
          r0[x0] += v * (S(1) - fy) * (S(1) - fx);
          r0[x1] += v * (S(1) - fy) * fx;
          r1[x0] += v * fy * (S(1) - fx);
          r1[x1] += v * fy * fx;
        }
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> resize_bilinear(const Tensor<S>& x, double scale) {
  require_rank(x.shape(), 4, "resize_bilinear");
  const Index oh = static_cast<Index>(std::llround(static_cast<double>(x.dim(2)) * scale));
  const Index ow = static_cast<Index>(std::llround(static_cast<double>(x.dim(3)) * scale));
  return resize_bilinear(x, oh, ow);
}

template <typename S>
Tensor<S> avg_pool2d(const Tensor<S>& x, Index window, Index stride) {
  require_rank(x.shape(), 4, "avg_pool2d");
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (window < 1 || stride < 1) throw ShapeError("avg_pool2d: window and stride must be positive");
  if (window > h || window > w)
    throw ShapeError("avg_pool2d: window " + std::to_string(window) + " exceeds spatial extent " +
                     std::to_string(h) + "x" + std::to_string(w));
  const Index ho = (h - window) / stride + 1, wo = (w - window) / stride + 1;
  Tensor<S> out({n, c, ho, wo});
  const S inv = S(1) / static_cast<S>(window * window);
  const S* px = x.ptr();
  S* py = out.ptr();
  for (Index p = 0; p < n * c; ++p) {
    const S* src = px + p * h * w;
    S* dst = py + p * ho * wo;
    for (Index oy = 0; oy < ho; ++oy)
      for (Index ox = 0; ox < wo; ++ox) {
        S acc = 0;
        for (Index ky = 0; ky < window; ++ky) {
          const S* row = src + (oy * stride + ky) * w + ox * stride;
          for (Index kx = 0; kx < window; ++kx) acc += row[kx];
        }
        dst[oy * wo + ox] = acc * inv;
      }
  }
  detail::attach<S>(out, {x}, [n, c, h, w, ho, wo, window, stride, inv](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* g = self.grad.data();
    for (Index p = 0; p < n * c; ++p) {
      S* dst = gx + p * h * w;
      const S* src = g + p * ho * wo;
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox) {
          const S v = src[oy * wo + ox] * inv;
          for (Index ky = 0; ky < window; ++ky) {
            S* row = dst + (oy * stride + ky) * w + ox * stride;
            for (Index kx = 0; kx < window; ++kx) row[kx] += v;
          }
        }
    }
  });
  return out;
}

template <typename S>
Tensor<S> max_pool2d(const Tensor<S>& x, Index window, Index stride, Index padding) {
  require_rank(x.shape(), 4, "max_pool2d");
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index ho = (h + 2 * padding - window) / stride + 1;
  const Index wo = (w + 2 * padding - window) / stride + 1;
  if (ho < 1 || wo < 1) throw ShapeError("max_pool2d: non-positive output size");
  Tensor<S> out({n, c, ho, wo});
  std::vector<Index> arg(static_cast<std::size_t>(out.numel()));
  const S* px = x.ptr();
  for (Index p = 0; p < n * c; ++p)
    for (Index oy = 0; oy < ho; ++oy)
      for (Index ox = 0; ox < wo; ++ox) {
        S best = -std::numeric_limits<S>::infinity();
        Index bi = -1;
        for (Index ky = 0; ky < window; ++ky) {
          const Index iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= h) continue;
          for (Index kx = 0; kx < window; ++kx) {
            const Index ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= w) continue;
            const Index k = p * h * w + iy * w + ix;
            if (px[k] > best) {
              best = px[k];
              bi = k;
            }
          }
        }
        const Index o = (p * ho + oy) * wo + ox;
        out.ptr()[o] = best;
        arg[o] = bi;
      }
  detail::attach<S>(out, {x}, [arg](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    for (std::size_t o = 0; o < arg.size(); ++o)
      if (arg[o] >= 0) gx[arg[o]] += self.grad[o];
  });
  return out;
}

template <typename S>
Tensor<S> reflection_pad2d(const Tensor<S>& x, Index pad) {
  require_rank(x.shape(), 4, "reflection_pad2d");
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (pad < 0 || pad >= h || pad >= w)
    throw ShapeError("reflection_pad2d: pad " + std::to_string(pad) + " must be smaller than " +
                     std::to_string(h) + "x" + std::to_string(w));
  const Index ho = h + 2 * pad, wo = w + 2 * pad;
  auto reflect = [](Index i, Index len) {
    if (i < 0) return -i;
    if (i >= len) return 2 * (len - 1) - i;
    return i;
  };
  std::vector<Index> ry(ho), rx(wo);
  for (Index i = 0; i < ho; ++i) ry[i] = reflect(i - pad, h);
  for (Index i = 0; i < wo; ++i) rx[i] = reflect(i - pad, w);
  Tensor<S> out({n, c, ho, wo});
  for (Index p = 0; p < n * c; ++p)
    for (Index oy = 0; oy < ho; ++oy)
      for (Index ox = 0; ox < wo; ++ox)
        out.ptr()[(p * ho + oy) * wo + ox] = x.ptr()[(p * h + ry[oy]) * w + rx[ox]];
  detail::attach<S>(out, {x}, [n, c, h, w, ho, wo, ry, rx](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    for (Index p = 0; p < n * c; ++p)
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox)
          gx[(p * h + ry[oy]) * w + rx[ox]] += self.grad[(p * ho + oy) * wo + ox];
  });
  return out;
}

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  require_rank(a.shape(), 2, "matmul lhs");
  require_rank(b.shape(), 2, "matmul rhs");
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: lhs axis 1 (" + std::to_string(k) + ") != rhs axis 0 (" +
                     std::to_string(b.dim(0)) + ")");
  MacCounter::record(m * k * n);
  Tensor<S> out({m, n});
  MapMat<S>(out.ptr(), m, n).noalias() = ConstMapMat<S>(a.ptr(), m, k) * ConstMapMat<S>(b.ptr(), k, n);
  detail::attach<S>(out, {a, b}, [m, k, n](detail::Node<S>& self) {
    ConstMapMat<S> g(self.grad.data(), m, n);
    if (S* ga = self.parent_grad(0))
      MapMat<S>(ga, m, k).noalias() += g * ConstMapMat<S>(self.parent_data(1), k, n).transpose();
    if (S* gb = self.parent_grad(1))
      MapMat<S>(gb, k, n).noalias() += ConstMapMat<S>(self.parent_data(0), m, k).transpose() * g;
  });
  return out;
}

#define LITEMONO_INSTANTIATE_OPS(S)                                                          \
  template Tensor<S> conv2d(const Tensor<S>&, const Tensor<S>&, const std::optional<std::type_identity_t<Tensor<S>>>&, \
                            const ConvSpec&);                                                \
  template Tensor<S> batch_norm(const Tensor<S>&, BatchNormState<S>&, bool);                 \
  template Tensor<S> layer_norm(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int,   \
                                double);                                                     \
  template Tensor<S> gelu(const Tensor<S>&);                                                 \
  template Tensor<S> elu(const Tensor<S>&, S);                                               \
  template Tensor<S> sigmoid(const Tensor<S>&);                                              \
  template Tensor<S> relu(const Tensor<S>&);                                                 \
  template Tensor<S> softmax(const Tensor<S>&, int);                                         \
  template Tensor<S> resize_bilinear(const Tensor<S>&, Index, Index);                        \
  template Tensor<S> resize_bilinear(const Tensor<S>&, double);                              \
  template Tensor<S> avg_pool2d(const Tensor<S>&, Index, Index);                             \
  template Tensor<S> max_pool2d(const Tensor<S>&, Index, Index, Index);                      \
  template Tensor<S> reflection_pad2d(const Tensor<S>&, Index);                              \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);

LITEMONO_INSTANTIATE_OPS(float)
LITEMONO_INSTANTIATE_OPS(double)

}  // namespace litemono
