#include "litemono/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace litemono {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d m;
  m << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return m;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
}

CameraIntrinsics CameraIntrinsics::resized(Index new_width, Index new_height) const {
  const double sx = static_cast<double>(new_width) / static_cast<double>(width);
  const double sy = static_cast<double>(new_height) / static_cast<double>(height);
  return {fx * sx, fy * sy, cx * sx, cy * sy, new_width, new_height};
}

CameraIntrinsics CameraIntrinsics::flipped() const {
  CameraIntrinsics k = *this;
  k.cx = static_cast<double>(width) - cx;
  return k;
}

namespace {

void check_size(const CameraIntrinsics& k, Index h, Index w, const char* what) {
  k.validate();
  if (k.width != w || k.height != h)
    throw ShapeError(std::string(what) + ": intrinsics are for " + std::to_string(k.width) + "x" +
                     std::to_string(k.height) + " but the map is " + std::to_string(w) + "x" +
                     std::to_string(h));
}

}  // namespace

template <typename S>
Tensor<S> backproject(const Tensor<S>& depth, const CameraIntrinsics& k, bool strict) {
  if (depth.rank() != 4 || depth.dim(1) != 1)
    throw ShapeError("backproject: expected depth N x 1 x H x W, got " + shape_string(depth.shape()));
  const Index n = depth.dim(0), h = depth.dim(2), w = depth.dim(3);
  check_size(k, h, w, "backproject");
  const Index hw = h * w;
  std::vector<S> rays(static_cast<std::size_t>(hw * 2));
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      rays[(i * w + j) * 2] = static_cast<S>((j + 0.5 - k.cx) / k.fx);
      rays[(i * w + j) * 2 + 1] = static_cast<S>((i + 0.5 - k.cy) / k.fy);
    }
  const S floor_depth = static_cast<S>(kMinProjectedDepth);
  Tensor<S> out({n, h, w, 3});
  const S* d = depth.ptr();
  S* p = out.ptr();
  for (Index q = 0; q < n * hw; ++q) {
    S z = d[q];
    if (strict && !(z > 0)) throw std::domain_error("backproject: non-positive depth " + std::to_string(z));
    if (!strict && !(z > floor_depth)) z = floor_depth;
    const S* r = rays.data() + (q % hw) * 2;
    p[q * 3] = z * r[0];
    p[q * 3 + 1] = z * r[1];
    p[q * 3 + 2] = z;
  }
  detail::attach<S>(out, {depth}, [n, hw, rays = std::move(rays), strict,
                                   floor_depth](detail::Node<S>& self) {
    S* gd = self.parent_grad(0);
    if (!gd) return;
    const S* d = self.parent_data(0);
    const S* g = self.grad.data();
    for (Index q = 0; q < n * hw; ++q) {
      if (!strict && !(d[q] > floor_depth)) continue;
      const S* r = rays.data() + (q % hw) * 2;
      gd[q] += g[q * 3] * r[0] + g[q * 3 + 1] * r[1] + g[q * 3 + 2];
    }
  });
  return out;
}

template <typename S>
Projection<S> project(const Tensor<S>& points, const CameraIntrinsics& k, const Tensor<S>& transform) {
  if (points.rank() != 4 || points.dim(3) != 3)
    throw ShapeError("project: expected points N x H x W x 3, got " + shape_string(points.shape()));
  const Index n = points.dim(0), h = points.dim(1), w = points.dim(2), hw = h * w;
  if (transform.shape() != Shape{n, 4, 4})
    throw ShapeError("project: expected transform [" + std::to_string(n) + ", 4, 4], got " +
                     shape_string(transform.shape()));
  check_size(k, h, w, "project");
  const S fx = static_cast<S>(k.fx), fy = static_cast<S>(k.fy);
  const S cx = static_cast<S>(k.cx - 0.5), cy = static_cast<S>(k.cy - 0.5);
  const S zeps = static_cast<S>(kMinProjectedDepth);
  Projection<S> out{Tensor<S>({n, h, w, 2}), Tensor<S>({n, 1, h, w})};
  // camera-space points after the transform, kept for backward
  std::vector<S> cam(static_cast<std::size_t>(n * hw * 3));
  const S* p = points.ptr();
  S* c = out.coords.ptr();
  S* valid = out.valid.ptr();
  for (Index b = 0; b < n; ++b) {
    const S* t = transform.ptr() + b * 16;
    for (Index q = 0; q < hw; ++q) {
      const S* x = p + (b * hw + q) * 3;
      S* y = cam.data() + (b * hw + q) * 3;
      for (int r = 0; r < 3; ++r) y[r] = t[r * 4] * x[0] + t[r * 4 + 1] * x[1] + t[r * 4 + 2] * x[2] + t[r * 4 + 3];
      const S z = std::max(y[2], zeps);
      const S u = fx * y[0] / z + cx, v = fy * y[1] / z + cy;
      c[(b * hw + q) * 2] = u;
      c[(b * hw + q) * 2 + 1] = v;
      const bool in = y[2] > zeps && u >= S(-0.5) && u <= static_cast<S>(w) - S(0.5) &&
                      v >= S(-0.5) && v <= static_cast<S>(h) - S(0.5);
      valid[b * hw + q] = in ? S(1) : S(0);
    }
  }
  detail::attach<S>(out.coords, {points, transform}, [n, hw, fx, fy, zeps,
                                                     cam = std::move(cam)](detail::Node<S>& self) {
    S* gp = self.parent_grad(0);
    S* gt = self.parent_grad(1);
    const S* p = self.parent_data(0);
    const S* t = self.parent_data(1);
    const S* g = self.grad.data();
    for (Index b = 0; b < n; ++b)
      for (Index q = 0; q < hw; ++q) {
        const Index e = b * hw + q;
        const S* y = cam.data() + e * 3;
        const bool clamped = !(y[2] > zeps);
        const S z = clamped ? zeps : y[2];
        const S gu = g[e * 2], gv = g[e * 2 + 1];
        S gy[3] = {gu * fx / z, gv * fy / z, S(0)};
        if (!clamped) gy[2] = -(gu * fx * y[0] + gv * fy * y[1]) / (z * z);
        if (gp)
          for (int col = 0; col < 3; ++col)
            gp[e * 3 + col] += gy[0] * t[b * 16 + col] + gy[1] * t[b * 16 + 4 + col] + gy[2] * t[b * 16 + 8 + col];
        if (gt) {
          const S* x = p + e * 3;
          for (int r = 0; r < 3; ++r) {
            S* row = gt + b * 16 + r * 4;
            row[0] += gy[r] * x[0];
            row[1] += gy[r] * x[1];
            row[2] += gy[r] * x[2];
            row[3] += gy[r];
          }
        }
      }
  });
  return out;
}

template <typename S>
Tensor<S> bilinear_sample(const Tensor<S>& source, const Tensor<S>& coords) {
  if (source.rank() != 4 || coords.rank() != 4 || coords.dim(3) != 2 || coords.dim(0) != source.dim(0))
    throw ShapeError("bilinear_sample: expected source N x C x H x W and coords N x H' x W' x 2, got " +
                     shape_string(source.shape()) + " and " + shape_string(coords.shape()));
  const Index n = source.dim(0), ch = source.dim(1), hs = source.dim(2), ws = source.dim(3);
  const Index h = coords.dim(1), w = coords.dim(2), hw = h * w;
  Tensor<S> out({n, ch, h, w});
  struct Tap {
    Index x0, x1, y0, y1;
    S wx, wy;
    bool inside_x, inside_y;
  };
  std::vector<Tap> taps(static_cast<std::size_t>(n * hw));
  const S xmax = static_cast<S>(ws - 1), ymax = static_cast<S>(hs - 1);
  for (Index e = 0; e < n * hw; ++e) {
    const S u = coords.ptr()[e * 2], v = coords.ptr()[e * 2 + 1];
    Tap tp;
    tp.inside_x = u > S(0) && u < xmax;
    tp.inside_y = v > S(0) && v < ymax;
    const S uc = std::clamp(u, S(0), xmax), vc = std::clamp(v, S(0), ymax);
    tp.x0 = static_cast<Index>(std::floor(uc));
    tp.y0 = static_cast<Index>(std::floor(vc));
    tp.x1 = std::min(tp.x0 + 1, ws - 1);
    tp.y1 = std::min(tp.y0 + 1, hs - 1);
    tp.wx = uc - static_cast<S>(tp.x0);
    tp.wy = vc - static_cast<S>(tp.y0);
    taps[e] = tp;
  }
  const S* src = source.ptr();
  S* dst = out.ptr();
  for (Index b = 0; b < n; ++b)
    for (Index c = 0; c < ch; ++c) {
      const S* plane = src + (b * ch + c) * hs * ws;
      S* o = dst + (b * ch + c) * hw;
      for (Index q = 0; q < hw; ++q) {
        const Tap& tp = taps[b * hw + q];
        const S top = plane[tp.y0 * ws + tp.x0] * (S(1) - tp.wx) + plane[tp.y0 * ws + tp.x1] * tp.wx;
        const S bot = plane[tp.y1 * ws + tp.x0] * (S(1) - tp.wx) + plane[tp.y1 * ws + tp.x1] * tp.wx;
        o[q] = top * (S(1) - tp.wy) + bot * tp.wy;
      }
    }
  detail::attach<S>(out, {source, coords}, [n, ch, hs, ws, hw,
                                            taps = std::move(taps)](detail::Node<S>& self) {
    S* gs = self.parent_grad(0);
    S* gc = self.parent_grad(1);
    const S* src = self.parent_data(0);
    const S* g = self.grad.data();
    for (Index b = 0; b < n; ++b)
      for (Index c = 0; c < ch; ++c) {
        const S* plane = src + (b * ch + c) * hs * ws;
        const S* go = g + (b * ch + c) * hw;
        S* gplane = gs ? gs + (b * ch + c) * hs * ws : nullptr;
        for (Index q = 0; q < hw; ++q) {
          const Tap& tp = taps[b * hw + q];
          const S gq = go[q];
          if (gplane) {
            gplane[tp.y0 * ws + tp.x0] += gq * (S(1) - tp.wx) * (S(1) - tp.wy);
            gplane[tp.y0 * ws + tp.x1] += gq * tp.wx * (S(1) - tp.wy);
            gplane[tp.y1 * ws + tp.x0] += gq * (S(1) - tp.wx) * tp.wy;
            gplane[tp.y1 * ws + tp.x1] += gq * tp.wx * tp.wy;
          }
          if (gc) {
            const S v00 = plane[tp.y0 * ws + tp.x0], v01 = plane[tp.y0 * ws + tp.x1];
            const S v10 = plane[tp.y1 * ws + tp.x0], v11 = plane[tp.y1 * ws + tp.x1];
            S* gxy = gc + (b * hw + q) * 2;
            if (tp.inside_x) gxy[0] += gq * ((v01 - v00) * (S(1) - tp.wy) + (v11 - v10) * tp.wy);
            if (tp.inside_y) gxy[1] += gq * ((v10 - v00) * (S(1) - tp.wx) + (v11 - v01) * tp.wx);
          }
        }
      }
  });
  return out;
}

template <typename S>
Synthesis<S> synthesize(const Tensor<S>& source, const Tensor<S>& depth, const Tensor<S>& transform,
                        const CameraIntrinsics& k) {
  Projection<S> proj = project(backproject(depth, k, false), k, transform);
  return {bilinear_sample(source, proj.coords), proj.valid};
}

#define LITEMONO_INSTANTIATE_GEOMETRY(S)                                                      \
  template Tensor<S> backproject(const Tensor<S>&, const CameraIntrinsics&, bool);           \
  template Projection<S> project(const Tensor<S>&, const CameraIntrinsics&, const Tensor<S>&); \
  template Tensor<S> bilinear_sample(const Tensor<S>&, const Tensor<S>&);                    \
  template Synthesis<S> synthesize(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,      \
                                   const CameraIntrinsics&);

LITEMONO_INSTANTIATE_GEOMETRY(float)
LITEMONO_INSTANTIATE_GEOMETRY(double)

}  // namespace litemono
