#include "litemono/attention.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "litemono/ops.hpp"

namespace litemono {

namespace {

thread_local AttentionProbe* current_probe = nullptr;

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMapMat = Eigen::Map<const RowMat<S>>;

constexpr double kNormEps = 1e-12;

template <typename S>
void softmax_rows(RowMat<S>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const S mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

template <typename S>
Tensor<S> xca_channels_first(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v,
                             Index heads, const std::optional<Tensor<S>>& temperature) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape())
    throw ShapeError("xca_attention: Q, K, V must share one [B, d, N] shape, got " +
                     shape_string(q.shape()) + ", " + shape_string(k.shape()) + ", " +
                     shape_string(v.shape()));
  const Index b = q.dim(0), d = q.dim(1), n = q.dim(2);
  if (heads < 1 || d % heads != 0)
    throw ShapeError("xca_attention: channel count " + std::to_string(d) +
                     " is not divisible by " + std::to_string(heads) + " heads");
  const bool normalized = temperature.has_value();
  if (normalized && temperature->numel() != heads)
    throw ShapeError("xca_attention: temperature needs one entry per head");
  const Index dh = d / heads;

  Tensor<S> out(q.shape());
  // Saved for backward: attention matrices and the row norms of Q and K.
  std::vector<S> probs(static_cast<std::size_t>(b * heads * dh * dh));
  std::vector<S> qnorm, knorm;
  if (normalized) {
    qnorm.resize(static_cast<std::size_t>(b * d));
    knorm.resize(static_cast<std::size_t>(b * d));
  }
  AttentionProbe::record(heads * dh * dh);
  MacCounter::record(2 * b * heads * dh * dh * n);

  RowMat<S> qh, kh, p;
  for (Index bi = 0; bi < b; ++bi)
    for (Index h = 0; h < heads; ++h) {
      const Index off = (bi * d + h * dh) * n;
      qh = ConstMapMat<S>(q.ptr() + off, dh, n);
      kh = ConstMapMat<S>(k.ptr() + off, dh, n);
      S tau = S(1);
      if (normalized) {
        tau = temperature->ptr()[h];
        for (Index i = 0; i < dh; ++i) {
          const S nq = std::max(qh.row(i).norm(), static_cast<S>(kNormEps));
          const S nk = std::max(kh.row(i).norm(), static_cast<S>(kNormEps));
          qnorm[bi * d + h * dh + i] = nq;
          knorm[bi * d + h * dh + i] = nk;
          qh.row(i) /= nq;
          kh.row(i) /= nk;
        }
      }
      p = tau * (qh * kh.transpose());
      softmax_rows(p);
      MapMat<S>(probs.data() + (bi * heads + h) * dh * dh, dh, dh) = p;
      MapMat<S>(out.ptr() + off, dh, n).noalias() = p * ConstMapMat<S>(v.ptr() + off, dh, n);
    }

  std::vector<Tensor<S>> inputs{q, k, v};
  if (normalized) inputs.push_back(*temperature);
  detail::attach<S>(out, inputs, [b, d, n, heads, dh, normalized, probs = std::move(probs),
                                  qnorm = std::move(qnorm),
                                  knorm = std::move(knorm)](detail::Node<S>& self) {
    const S* pq = self.parent_data(0);
    const S* pk = self.parent_data(1);
    const S* pv = self.parent_data(2);
    S* gq = self.parent_grad(0);
    S* gk = self.parent_grad(1);
    S* gv = self.parent_grad(2);
    S* gt = normalized ? self.parent_grad(3) : nullptr;
    const S* ptau = normalized ? self.parent_data(3) : nullptr;
    RowMat<S> qh, kh, dp, ds, dqh, dkh;
    for (Index bi = 0; bi < b; ++bi)
      for (Index h = 0; h < heads; ++h) {
        const Index off = (bi * d + h * dh) * n;
        ConstMapMat<S> p(probs.data() + (bi * heads + h) * dh * dh, dh, dh);
        ConstMapMat<S> go(self.grad.data() + off, dh, n);
        ConstMapMat<S> vh(pv + off, dh, n);
        if (gv) MapMat<S>(gv + off, dh, n).noalias() += p.transpose() * go;
        if (!gq && !gk && !gt) continue;
        dp.noalias() = go * vh.transpose();
        ds = p.cwiseProduct(dp);
        const Eigen::Matrix<S, Eigen::Dynamic, 1> rs = ds.rowwise().sum();
        ds -= p.cwiseProduct(rs.replicate(1, dh));
        qh = ConstMapMat<S>(pq + off, dh, n);
        kh = ConstMapMat<S>(pk + off, dh, n);
        if (!normalized) {
          if (gq) MapMat<S>(gq + off, dh, n).noalias() += ds * kh;
          if (gk) MapMat<S>(gk + off, dh, n).noalias() += ds.transpose() * qh;
          continue;
        }
        const S tau = ptau[h];
        for (Index i = 0; i < dh; ++i) {
          qh.row(i) /= qnorm[bi * d + h * dh + i];
          kh.row(i) /= knorm[bi * d + h * dh + i];
        }
        if (gt) gt[h] += (ds.cwiseProduct(qh * kh.transpose())).sum();
        // Through the row normalization x_hat = x / max(|x|, eps).
        auto through_norm = [&](const RowMat<S>& dxhat, const RowMat<S>& xhat,
                                const std::vector<S>& norms, const S* raw, S* gx) {
          for (Index i = 0; i < dh; ++i) {
            const Index row = bi * d + h * dh + i;
            const S nx = norms[row];
            Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>> g(gx + off + i * n, n);
            const bool clamped =
                ConstMapMat<S>(raw + off + i * n, 1, n).norm() < static_cast<S>(kNormEps);
            if (clamped)
              g += dxhat.row(i) / nx;
            else
              g += (dxhat.row(i) - xhat.row(i) * xhat.row(i).dot(dxhat.row(i))) / nx;
          }
        };
        if (gq) {
          dqh.noalias() = tau * (ds * kh);
          through_norm(dqh, qh, qnorm, pq, gq);
        }
        if (gk) {
          dkh.noalias() = tau * (ds.transpose() * qh);
          through_norm(dkh, kh, knorm, pk, gk);
        }
      }
  });
  return out;
}

}  // namespace

AttentionProbe::AttentionProbe() : previous_(current_probe) { current_probe = this; }

AttentionProbe::~AttentionProbe() {
  current_probe = previous_;
  if (previous_) previous_->peak_ = std::max(previous_->peak_, peak_);
}

void AttentionProbe::record(Index elements) {
  if (current_probe) current_probe->peak_ = std::max(current_probe->peak_, elements);
}

template <typename S>
Tensor<S> xca_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v, Index heads,
                        const std::optional<std::type_identity_t<Tensor<S>>>& temperature) {
  if (q.rank() == 2) {
    // token-major [N, d] -> [1, d, N] and back
    auto to_cf = [](const Tensor<S>& t) {
      return reshape(transpose(t), {1, t.dim(1), t.dim(0)});
    };
    Tensor<S> o = xca_channels_first(to_cf(q), to_cf(k), to_cf(v), heads, temperature);
    return transpose(reshape(o, {q.dim(1), q.dim(0)}));
  }
  return xca_channels_first(q, k, v, heads, temperature);
}

template <typename S>
Tensor<S> spatial_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v,
                            Index heads) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape())
    throw ShapeError("spatial_attention: Q, K, V must share one [B, d, N] shape");
  const Index b = q.dim(0), d = q.dim(1), n = q.dim(2);
  if (heads < 1 || d % heads != 0) throw ShapeError("spatial_attention: d % heads != 0");
  const Index dh = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  AttentionProbe::record(heads * n * n);
  std::vector<Tensor<S>> items;
  for (Index bi = 0; bi < b; ++bi) {
    std::vector<Tensor<S>> outs;
    for (Index h = 0; h < heads; ++h) {
      auto part = [&](const Tensor<S>& t) {
        return reshape(slice(slice(t, 0, bi, 1), 1, h * dh, dh), {dh, n});
      };
      Tensor<S> scores = matmul(transpose(part(q)), part(k)) * scale;  // [N, N]
      Tensor<S> attn = softmax(scores, 1);
      outs.push_back(matmul(part(v), transpose(attn)));  // [dh, N]
    }
    items.push_back(reshape(concat(outs, 0), {1, d, n}));
  }
  return concat(items, 0);
}

template Tensor<float> xca_attention(const Tensor<float>&, const Tensor<float>&,
                                     const Tensor<float>&, Index,
                                     const std::optional<Tensor<float>>&);
template Tensor<double> xca_attention(const Tensor<double>&, const Tensor<double>&,
                                      const Tensor<double>&, Index,
                                      const std::optional<Tensor<double>>&);
template Tensor<float> spatial_attention(const Tensor<float>&, const Tensor<float>&,
                                         const Tensor<float>&, Index);
template Tensor<double> spatial_attention(const Tensor<double>&, const Tensor<double>&,
                                          const Tensor<double>&, Index);

}  // namespace litemono
