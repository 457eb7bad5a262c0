#include "litemono/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "litemono/ops.hpp"

namespace litemono {

void LossConfig::validate() const {
  if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("loss: alpha must lie in [0, 1]");
  if (!(lambda_smooth >= 0)) throw std::invalid_argument("loss: lambda_smooth must be non-negative");
  if (num_scales < 1 || num_scales > 3) throw std::invalid_argument("loss: num_scales must be 1, 2 or 3");
  if (!(min_depth > 0) || !(min_depth < max_depth))
    throw std::invalid_argument("loss: need 0 < min_depth < max_depth");
}

namespace {

template <typename S>
Tensor<S> window_mean(const Tensor<S>& x) {
  return avg_pool2d(reflection_pad2d(x, 1), 3, 1);
}

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

// Constant tensor (no graph) holding the pointwise minimum over maps.
template <typename S>
Tensor<S> min_values(const std::vector<Tensor<S>>& maps) {
  Tensor<S> out = maps.front().detach();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    require_same_shape(out, maps[i], "auto_mask");
    for (Index q = 0; q < out.numel(); ++q) out.data()[q] = std::min(out.data()[q], maps[i].ptr()[q]);
  }
  return out;
}

template <typename S>
Tensor<S> masked_mean(const Tensor<S>& map, const Tensor<S>& mask, Index& count) {
  double c = 0;
  for (S v : mask.data()) c += static_cast<double>(v);
  count = static_cast<Index>(c);
  if (c == 0) return Tensor<S>::scalar(S(0));
  return sum(map * mask) * static_cast<S>(1 / c);
}

template <typename S>
Tensor<S> abs_dx(const Tensor<S>& x) {
  const Index w = x.dim(3);
  return abs(slice(x, 3, 1, w - 1) - slice(x, 3, 0, w - 1));
}

template <typename S>
Tensor<S> abs_dy(const Tensor<S>& x) {
  const Index h = x.dim(2);
  return abs(slice(x, 2, 1, h - 1) - slice(x, 2, 0, h - 1));
}

}  // namespace

template <typename S>
Tensor<S> ssim(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "ssim");
  if (a.rank() != 4) throw ShapeError("ssim: expected N x C x H x W, got " + shape_string(a.shape()));
  const S c1 = S(1e-4), c2 = S(9e-4);
  const Tensor<S> mu_a = window_mean(a), mu_b = window_mean(b);
  const Tensor<S> var_a = window_mean(a * a) - mu_a * mu_a;
  const Tensor<S> var_b = window_mean(b * b) - mu_b * mu_b;
  const Tensor<S> cov = window_mean(a * b) - mu_a * mu_b;
  const Tensor<S> num = (S(2) * mu_a * mu_b + c1) * (S(2) * cov + c2);
  const Tensor<S> den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return num / den;
}

template <typename S>
Tensor<S> photometric_loss(const Tensor<S>& pred, const Tensor<S>& target, double alpha) {
  require_same_shape(pred, target, "photometric_loss");
  const S a = static_cast<S>(alpha);
  const Tensor<S> l1 = mean(abs(pred - target), 1, true);
  if (alpha == 0) return l1;
  const Tensor<S> dssim = mean(clamp((S(1) - ssim(pred, target)) * S(0.5), S(0), S(1)), 1, true);
  if (alpha == 1) return dssim;
  return a * dssim + (S(1) - a) * l1;
}

template <typename S>
Tensor<S> min_reprojection(const std::vector<Tensor<S>>& maps) {
  if (maps.empty()) throw std::invalid_argument("min_reprojection: no loss maps");
  Tensor<S> out = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    require_same_shape(out, maps[i], "min_reprojection");
    out = minimum(out, maps[i]);
  }
  return out;
}

template <typename S>
Tensor<S> auto_mask(const std::vector<Tensor<S>>& unwarped, const std::vector<Tensor<S>>& warped) {
  if (unwarped.empty() || warped.empty()) throw std::invalid_argument("auto_mask: no loss maps");
  const Tensor<S> u = min_values(unwarped), w = min_values(warped);
  require_same_shape(u, w, "auto_mask");
  Tensor<S> mu(u.shape());
  for (Index q = 0; q < mu.numel(); ++q) mu.data()[q] = u.ptr()[q] > w.ptr()[q] ? S(1) : S(0);
  return mu;
}

template <typename S>
Tensor<S> smoothness(const Tensor<S>& disp, const Tensor<S>& image, bool literal) {
  if (disp.rank() != 4 || disp.dim(1) != 1 || image.rank() != 4 || image.dim(0) != disp.dim(0) ||
      image.dim(2) != disp.dim(2) || image.dim(3) != disp.dim(3))
    throw ShapeError("smoothness: expected disp N x 1 x H x W and image N x C x H x W, got " +
                     shape_string(disp.shape()) + " and " + shape_string(image.shape()));
  const Index n = disp.dim(0), h = disp.dim(2), w = disp.dim(3);
  if (h < 2 || w < 2) throw ShapeError("smoothness: need at least 2 x 2 pixels");
  const Tensor<S> m = reshape(mean(reshape(disp, {n, h * w}), 1, true), {n, 1, 1, 1});
  for (S v : m.data())
    if (v == S(0)) throw std::domain_error("smoothness: mean disparity is zero");
  const Tensor<S> d = disp / m;
  const Tensor<S> ex = exp(-mean(abs_dx(image), 1, true));
  const Tensor<S> ey = exp(-mean(abs_dy(image), 1, true));
  const Tensor<S> gx = abs_dx(d);
  if (!literal) return mean(gx * ex) + mean(abs_dy(d) * ey);
  // both terms use the horizontal disparity gradient; crop to the overlap
  const Tensor<S> gx_top = slice(gx, 2, 0, h - 1);
  return mean(gx * ex) + mean(gx_top * slice(ey, 3, 0, w - 1));
}

template <typename S>
LossResult<S> total_loss(const DepthPyramid<S>& disp, const Tensor<S>& target,
                         const std::vector<Tensor<S>>& sources, const std::vector<Tensor<S>>& transforms,
                         const CameraIntrinsics& k, const LossConfig& cfg) {
  cfg.validate();
  if (sources.empty() || sources.size() != transforms.size())
    throw std::invalid_argument("total_loss: need one transform per source frame and at least one source");
  if (target.rank() != 4) throw ShapeError("total_loss: expected target N x C x H x W");
  const Index h = target.dim(2), w = target.dim(3);
  const S sentinel = static_cast<S>(kInvalidPixelLoss);

  LossResult<S> r;
  for (const auto& src : sources) {
    require_same_shape(src, target, "total_loss");
    r.identity_reprojection.push_back(photometric_loss(src, target, cfg.alpha));
  }

  Tensor<S> total;
  for (int s = 0; s < cfg.num_scales; ++s) {
    ScaleDiagnostics<S> d;
    const Tensor<S>& ds = disp.disp[s];
    if (!ds.defined()) throw std::invalid_argument("total_loss: missing disparity at scale " + std::to_string(s));
    const Tensor<S> up = ds.dim(2) == h && ds.dim(3) == w ? ds : resize_bilinear(ds, h, w);
    d.depth = disp_to_depth(up, cfg.min_depth, cfg.max_depth);

    Tensor<S> any_valid = Tensor<S>::zeros({target.dim(0), 1, h, w});
    Tensor<S> valid_count = any_valid.detach();
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const Synthesis<S> syn = synthesize(sources[i], d.depth, transforms[i], k);
      const Tensor<S> l = photometric_loss(syn.image, target, cfg.alpha);
      d.warped.push_back(syn.image);
      d.valid.push_back(syn.valid);
      d.reprojection.push_back(l * syn.valid + (S(1) - syn.valid) * sentinel);
      for (Index q = 0; q < any_valid.numel(); ++q) {
        valid_count.data()[q] += syn.valid.ptr()[q];
        any_valid.data()[q] = std::max(any_valid.data()[q], syn.valid.ptr()[q]);
      }
    }

    if (cfg.min_reprojection) {
      d.combined = min_reprojection(d.reprojection);
    } else {
      Tensor<S> inv = valid_count.detach();
      for (S& v : inv.data()) v = v > 0 ? S(1) / v : S(0);
      Tensor<S> acc = d.reprojection[0] * d.valid[0];
      for (std::size_t i = 1; i < sources.size(); ++i) acc = acc + d.reprojection[i] * d.valid[i];
      d.combined = acc * inv + (S(1) - any_valid) * sentinel;
    }

    d.automask = cfg.automask ? auto_mask(r.identity_reprojection, std::vector<Tensor<S>>{d.combined})
                              : Tensor<S>::ones(any_valid.shape());
    d.loss_mask = d.automask * any_valid;
    const Tensor<S> recon_map = cfg.literal_reconstruction ? min_values(r.identity_reprojection) : d.combined;
    d.reconstruction = masked_mean(recon_map, d.loss_mask, d.masked_pixels);

    const Tensor<S> img = ds.dim(2) == h && ds.dim(3) == w ? target : resize_bilinear(target, ds.dim(2), ds.dim(3));
    d.smoothness = smoothness(ds, img, cfg.literal_smoothness);
    d.smooth_weight = cfg.lambda_smooth / std::ldexp(1.0, s);
    d.total = d.reconstruction + d.smoothness * static_cast<S>(d.smooth_weight);
    total = total.defined() ? total + d.total : d.total;
    r.scales.push_back(std::move(d));
  }
  r.total = total * static_cast<S>(1.0 / cfg.num_scales);
  return r;
}

#define LITEMONO_INSTANTIATE_LOSSES(S)                                                           \
  template Tensor<S> ssim(const Tensor<S>&, const Tensor<S>&);                                  \
  template Tensor<S> photometric_loss(const Tensor<S>&, const Tensor<S>&, double);              \
  template Tensor<S> min_reprojection(const std::vector<Tensor<S>>&);                           \
  template Tensor<S> auto_mask(const std::vector<Tensor<S>>&, const std::vector<Tensor<S>>&);   \
  template Tensor<S> smoothness(const Tensor<S>&, const Tensor<S>&, bool);                      \
  template LossResult<S> total_loss(const DepthPyramid<S>&, const Tensor<S>&,                   \
                                    const std::vector<Tensor<S>>&, const std::vector<Tensor<S>>&, \
                                    const CameraIntrinsics&, const LossConfig&);

LITEMONO_INSTANTIATE_LOSSES(float)
LITEMONO_INSTANTIATE_LOSSES(double)

}  // namespace litemono
