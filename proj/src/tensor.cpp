#include "litemono/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace litemono {

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;

int normalize_axis(int axis, int rank) {
  int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank)
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  return a;
}

// Outer/len/inner decomposition around an axis.
struct AxisSplit {
  Index outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit r;
  for (int i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---------------------------------------------------------------------------

template <typename S>
Tensor<S>::Tensor(Shape shape, S fill) : node_(std::make_shared<NodeType>()) {
  const Index n = shape_numel(shape);
  node_->shape = std::move(shape);
  node_->data.assign(static_cast<std::size_t>(n), fill);
}

template <typename S>
Tensor<S>::Tensor(Shape shape, std::vector<S> values) : node_(std::make_shared<NodeType>()) {
  const Index n = shape_numel(shape);
  if (n != static_cast<Index>(values.size()))
    throw ShapeError("shape " + shape_string(shape) + " holds " + std::to_string(n) +
                     " values but " + std::to_string(values.size()) + " were given");
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

template <typename S>
Index Tensor<S>::dim(int axis) const {
  return node_->shape[normalize_axis(axis, rank())];
}

template <typename S>
Index Tensor<S>::flat_index(std::initializer_list<Index> idx) const {
  if (static_cast<int>(idx.size()) != rank())
    throw ShapeError("index rank " + std::to_string(idx.size()) + " != tensor rank " +
                     std::to_string(rank()));
  Index flat = 0;
  int axis = 0;
  for (Index i : idx) {
    const Index d = node_->shape[axis];
    if (i < 0 || i >= d)
      throw ShapeError("index " + std::to_string(i) + " out of range on axis " +
                       std::to_string(axis) + " (size " + std::to_string(d) + ")");
    flat = flat * d + i;
    ++axis;
  }
  return flat;
}

template <typename S>
S& Tensor<S>::at(std::initializer_list<Index> idx) {
  return node_->data[flat_index(idx)];
}

template <typename S>
S Tensor<S>::at(std::initializer_list<Index> idx) const {
  return node_->data[flat_index(idx)];
}

template <typename S>
S Tensor<S>::item() const {
  if (numel() != 1)
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

template <typename S>
Tensor<S>& Tensor<S>::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  if (!flag) node_->grad.clear();
  return *this;
}

template <typename S>
std::span<S> Tensor<S>::grad() {
  if (!node_->requires_grad) throw std::logic_error("tensor does not require grad");
  node_->ensure_grad();
  return node_->grad;
}

template <typename S>
std::span<const S> Tensor<S>::grad() const {
  if (!node_->requires_grad) throw std::logic_error("tensor does not require grad");
  node_->ensure_grad();
  return node_->grad;
}

template <typename S>
Tensor<S> Tensor<S>::grad_tensor() const {
  Tensor g(shape());
  if (has_grad()) std::copy(node_->grad.begin(), node_->grad.end(), g.ptr());
  return g;
}

template <typename S>
void Tensor<S>::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->data.size(), S(0));
}

template <typename S>
Tensor<S> Tensor<S>::detach() const {
  return Tensor(node_->shape, node_->data);
}

template <typename S>
void Tensor<S>::backward() const {
  if (numel() != 1)
    throw ShapeError("backward() requires a scalar loss, got shape " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS for a topological order.
  std::vector<NodeType*> order;
  std::unordered_set<NodeType*> seen;
  std::vector<std::pair<NodeType*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeType* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (NodeType* n : order)
    if (!n->is_leaf()) n->grad.assign(n->data.size(), S(0));
  node_->ensure_grad();
  node_->grad[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (!(*it)->is_leaf()) (*it)->backward(**it);
}

template <typename S>
template <typename Other>
Tensor<Other> Tensor<S>::cast() const {
  std::vector<Other> v(node_->data.begin(), node_->data.end());
  return Tensor<Other>(node_->shape, std::move(v));
}

// ---------------------------------------------------------------------------
// Broadcasting machinery.

namespace {

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const Index da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const Index db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("cannot broadcast " + shape_string(a) + " with " + shape_string(b) +
                       " on axis " + std::to_string(i));
    out[i] = da == 1 ? db : da;
  }
  return out;
}

// Strides of `s` expressed in the (right-aligned) output index space, with 0
// on broadcast axes.
std::vector<Index> broadcast_strides(const Shape& s, const Shape& out) {
  const std::size_t r = out.size();
  std::vector<Index> st(r, 0);
  Index acc = 1;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::size_t i = s.size() - 1 - k;
    const std::size_t o = r - 1 - k;
    st[o] = s[i] == 1 ? 0 : acc;
    acc *= s[i];
  }
  return st;
}

// Calls fn(out_flat, a_flat, b_flat) for every output element.
template <typename Fn>
void for_each_broadcast(const Shape& out, const std::vector<Index>& sa,
                        const std::vector<Index>& sb, Fn&& fn) {
  const Index n = shape_numel(out);
  if (n == 0) return;
  const std::size_t r = out.size();
  if (r == 0) {
    fn(Index(0), Index(0), Index(0));
    return;
  }
  std::vector<Index> idx(r, 0);
  Index ia = 0, ib = 0;
  const Index last = out[r - 1];
  const Index la = sa[r - 1], lb = sb[r - 1];
  for (Index o = 0; o < n; o += last) {
    for (Index j = 0; j < last; ++j) fn(o + j, ia + j * la, ib + j * lb);
    // advance all but the innermost axis
    for (int ax = static_cast<int>(r) - 2; ax >= 0; --ax) {
      ++idx[ax];
      ia += sa[ax];
      ib += sb[ax];
      if (idx[ax] < out[ax]) break;
      ia -= sa[ax] * out[ax];
      ib -= sb[ax] * out[ax];
      idx[ax] = 0;
    }
  }
}

// Binary op kernel. Op provides f(a,b), da(a,b,y), db(a,b,y).
template <typename S, typename Op>
Tensor<S> binary(const Tensor<S>& a, const Tensor<S>& b, Op op) {
  const Shape out_shape = a.shape() == b.shape() ? a.shape() : broadcast_shape(a.shape(), b.shape());
  Tensor<S> out(out_shape);
  const S* pa = a.ptr();
  const S* pb = b.ptr();
  S* po = out.ptr();
  const bool same = a.shape() == b.shape();
  std::vector<Index> sa, sb;
  if (same) {
    const Index n = out.numel();
    for (Index i = 0; i < n; ++i) po[i] = op.f(pa[i], pb[i]);
  } else {
    sa = broadcast_strides(a.shape(), out_shape);
    sb = broadcast_strides(b.shape(), out_shape);
    for_each_broadcast(out_shape, sa, sb,
                       [&](Index o, Index i, Index j) { po[o] = op.f(pa[i], pb[j]); });
  }
  detail::attach<S>(out, {a, b}, [op, same, out_shape, sa, sb](detail::Node<S>& self) {
    const S* pa = self.parent_data(0);
    const S* pb = self.parent_data(1);
    const S* py = self.data.data();
    const S* g = self.grad.data();
    S* ga = self.parent_grad(0);
    S* gb = self.parent_grad(1);
    if (same) {
      const Index n = static_cast<Index>(self.data.size());
      if (ga)
        for (Index i = 0; i < n; ++i) ga[i] += g[i] * op.da(pa[i], pb[i], py[i]);
      if (gb)
        for (Index i = 0; i < n; ++i) gb[i] += g[i] * op.db(pa[i], pb[i], py[i]);
    } else {
      for_each_broadcast(out_shape, sa, sb, [&](Index o, Index i, Index j) {
        if (ga) ga[i] += g[o] * op.da(pa[i], pb[j], py[o]);
        if (gb) gb[j] += g[o] * op.db(pa[i], pb[j], py[o]);
      });
    }
  });
  return out;
}

template <typename S, typename Op>
Tensor<S> unary(const Tensor<S>& x, Op op) {
  Tensor<S> out(x.shape());
  const S* px = x.ptr();
  S* po = out.ptr();
  const Index n = x.numel();
  for (Index i = 0; i < n; ++i) po[i] = op.f(px[i]);
  detail::attach<S>(out, {x}, [op](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* px = self.parent_data(0);
    const S* py = self.data.data();
    const S* g = self.grad.data();
    const Index n = static_cast<Index>(self.data.size());
    for (Index i = 0; i < n; ++i) gx[i] += g[i] * op.df(px[i], py[i]);
  });
  return out;
}

template <typename S> struct AddOp {
  S f(S a, S b) const { return a + b; }
  S da(S, S, S) const { return 1; }
  S db(S, S, S) const { return 1; }
};
template <typename S> struct SubOp {
  S f(S a, S b) const { return a - b; }
  S da(S, S, S) const { return 1; }
  S db(S, S, S) const { return -1; }
};
template <typename S> struct MulOp {
  S f(S a, S b) const { return a * b; }
  S da(S, S b, S) const { return b; }
  S db(S a, S, S) const { return a; }
};
template <typename S> struct DivOp {
  S f(S a, S b) const { return a / b; }
  S da(S, S b, S) const { return S(1) / b; }
  S db(S, S b, S y) const { return -y / b; }
};
template <typename S> struct MinOp {
  S f(S a, S b) const { return b < a ? b : a; }
  S da(S a, S b, S) const { return b < a ? S(0) : S(1); }
  S db(S a, S b, S) const { return b < a ? S(1) : S(0); }
};

}  // namespace

template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) { return binary(a, b, AddOp<S>{}); }
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) { return binary(a, b, SubOp<S>{}); }
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) { return binary(a, b, MulOp<S>{}); }
template <typename S> Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) { return binary(a, b, DivOp<S>{}); }
template <typename S> Tensor<S> minimum(const Tensor<S>& a, const Tensor<S>& b) { return binary(a, b, MinOp<S>{}); }

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S s) {
  struct Op { S s; S f(S x) const { return x + s; } S df(S, S) const { return 1; } };
  return unary(a, Op{s});
}
template <typename S>
Tensor<S> mul_scalar(const Tensor<S>& a, S s) {
  struct Op { S s; S f(S x) const { return x * s; } S df(S, S) const { return s; } };
  return unary(a, Op{s});
}
template <typename S>
Tensor<S> rsub_scalar(const Tensor<S>& a, S s) {
  struct Op { S s; S f(S x) const { return s - x; } S df(S, S) const { return -1; } };
  return unary(a, Op{s});
}
template <typename S>
Tensor<S> neg(const Tensor<S>& x) {
  struct Op { S f(S v) const { return -v; } S df(S, S) const { return -1; } };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> exp(const Tensor<S>& x) {
  struct Op { S f(S v) const { return std::exp(v); } S df(S, S y) const { return y; } };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> log(const Tensor<S>& x) {
  struct Op { S f(S v) const { return std::log(v); } S df(S v, S) const { return S(1) / v; } };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> sqrt(const Tensor<S>& x) {
  struct Op { S f(S v) const { return std::sqrt(v); } S df(S, S y) const { return S(0.5) / y; } };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> abs(const Tensor<S>& x) {
  struct Op {
    S f(S v) const { return std::abs(v); }
    S df(S v, S) const { return v > 0 ? S(1) : (v < 0 ? S(-1) : S(0)); }
  };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> square(const Tensor<S>& x) {
  struct Op { S f(S v) const { return v * v; } S df(S v, S) const { return 2 * v; } };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> reciprocal(const Tensor<S>& x) {
  struct Op { S f(S v) const { return S(1) / v; } S df(S, S y) const { return -y * y; } };
  return unary(x, Op{});
}
template <typename S>
Tensor<S> clamp(const Tensor<S>& x, S lo, S hi) {
  struct Op {
    S lo, hi;
    S f(S v) const { return std::min(std::max(v, lo), hi); }
    S df(S v, S) const { return (v > lo && v < hi) ? S(1) : S(0); }
  };
  return unary(x, Op{lo, hi});
}

// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  S acc = 0;
  for (S v : x.data()) acc += v;
  Tensor<S> out = Tensor<S>::scalar(acc);
  detail::attach<S>(out, {x}, [](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S g = self.grad[0];
    const std::size_t n = self.parents[0]->data.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
  return out;
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  return mul_scalar(sum(x), S(1) / static_cast<S>(x.numel()));
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x, int axis, bool keepdim) {
  const int ax = normalize_axis(axis, x.rank());
  const AxisSplit sp = split_at(x.shape(), ax);
  Shape os = x.shape();
  if (keepdim) os[ax] = 1; else os.erase(os.begin() + ax);
  Tensor<S> out(os);
  const S* px = x.ptr();
  S* po = out.ptr();
  for (Index o = 0; o < sp.outer; ++o)
    for (Index l = 0; l < sp.len; ++l) {
      const S* row = px + (o * sp.len + l) * sp.inner;
      S* dst = po + o * sp.inner;
      for (Index i = 0; i < sp.inner; ++i) dst[i] += row[i];
    }
  detail::attach<S>(out, {x}, [sp](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* g = self.grad.data();
    for (Index o = 0; o < sp.outer; ++o)
      for (Index l = 0; l < sp.len; ++l) {
        S* row = gx + (o * sp.len + l) * sp.inner;
        const S* src = g + o * sp.inner;
        for (Index i = 0; i < sp.inner; ++i) row[i] += src[i];
      }
  });
  return out;
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x, int axis, bool keepdim) {
  const Index len = x.dim(axis);
  if (len == 0) throw ShapeError("mean over empty axis " + std::to_string(axis));
  return mul_scalar(sum(x, axis, keepdim), S(1) / static_cast<S>(len));
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  Tensor<S> out(std::move(shape), std::vector<S>(x.data().begin(), x.data().end()));
  detail::attach<S>(out, {x}, [](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
  return out;
}

template <typename S>
Tensor<S> slice(const Tensor<S>& x, int axis, Index start, Index length) {
  const int ax = normalize_axis(axis, x.rank());
  const AxisSplit sp = split_at(x.shape(), ax);
  if (start < 0 || length < 0 || start + length > sp.len)
    throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of range on axis " + std::to_string(ax) + " of size " +
                     std::to_string(sp.len));
  Shape os = x.shape();
  os[ax] = length;
  Tensor<S> out(os);
  const S* px = x.ptr();
  S* po = out.ptr();
  const Index block = length * sp.inner;
  for (Index o = 0; o < sp.outer; ++o)
    std::copy_n(px + (o * sp.len + start) * sp.inner, block, po + o * block);
  detail::attach<S>(out, {x}, [sp, start, block](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    const S* g = self.grad.data();
    for (Index o = 0; o < sp.outer; ++o) {
      S* dst = gx + (o * sp.len + start) * sp.inner;
      const S* src = g + o * block;
      for (Index i = 0; i < block; ++i) dst[i] += src[i];
    }
  });
  return out;
}

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  if (parts.size() == 1) return parts.front();
  const int ax = normalize_axis(axis, parts[0].rank());
  Shape os = parts[0].shape();
  Index total = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Shape& s = parts[p].shape();
    if (s.size() != os.size())
      throw ShapeError("concat rank mismatch: " + shape_string(s) + " vs " + shape_string(os));
    for (std::size_t i = 0; i < s.size(); ++i)
      if (static_cast<int>(i) != ax && s[i] != os[i])
        throw ShapeError("concat mismatch on axis " + std::to_string(i) + ": " +
                         shape_string(s) + " vs " + shape_string(os));
    total += s[ax];
  }
  os[ax] = total;
  Tensor<S> out(os);
  const AxisSplit sp = split_at(os, ax);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const Index block = p.dim(ax) * sp.inner;
    const S* src = p.ptr();
    for (Index o = 0; o < sp.outer; ++o)
      std::copy_n(src + o * block, block, out.ptr() + o * total * sp.inner + off * sp.inner);
    off += p.dim(ax);
  }
  std::vector<Index> lens;
  for (const auto& p : parts) lens.push_back(p.dim(ax));
  detail::attach<S>(out, parts, [sp, total, offsets, lens](detail::Node<S>& self) {
    const S* g = self.grad.data();
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      S* gp = self.parent_grad(p);
      if (!gp) continue;
      const Index block = lens[p] * sp.inner;
      for (Index o = 0; o < sp.outer; ++o) {
        const S* src = g + o * total * sp.inner + offsets[p] * sp.inner;
        S* dst = gp + o * block;
        for (Index i = 0; i < block; ++i) dst[i] += src[i];
      }
    }
  });
  return out;
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& x) {
  if (x.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_string(x.shape()));
  const Index r = x.dim(0), c = x.dim(1);
  Tensor<S> out({c, r});
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out.ptr()[j * r + i] = x.ptr()[i * c + j];
  detail::attach<S>(out, {x}, [r, c](detail::Node<S>& self) {
    S* gx = self.parent_grad(0);
    if (!gx) return;
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) gx[i * c + j] += self.grad[j * r + i];
  });
  return out;
}

#define LITEMONO_INSTANTIATE_TENSOR(S)                                                   \
  template class Tensor<S>;                                                             \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> div(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> minimum(const Tensor<S>&, const Tensor<S>&);                       \
  template Tensor<S> add_scalar(const Tensor<S>&, S);                                   \
  template Tensor<S> mul_scalar(const Tensor<S>&, S);                                   \
  template Tensor<S> rsub_scalar(const Tensor<S>&, S);                                  \
  template Tensor<S> neg(const Tensor<S>&);                                             \
  template Tensor<S> exp(const Tensor<S>&);                                             \
  template Tensor<S> log(const Tensor<S>&);                                             \
  template Tensor<S> sqrt(const Tensor<S>&);                                            \
  template Tensor<S> abs(const Tensor<S>&);                                             \
  template Tensor<S> square(const Tensor<S>&);                                          \
  template Tensor<S> reciprocal(const Tensor<S>&);                                      \
  template Tensor<S> clamp(const Tensor<S>&, S, S);                                     \
  template Tensor<S> sum(const Tensor<S>&);                                             \
  template Tensor<S> mean(const Tensor<S>&);                                            \
  template Tensor<S> sum(const Tensor<S>&, int, bool);                                  \
  template Tensor<S> mean(const Tensor<S>&, int, bool);                                 \
  template Tensor<S> reshape(const Tensor<S>&, Shape);                                  \
  template Tensor<S> slice(const Tensor<S>&, int, Index, Index);                        \
  template Tensor<S> concat(const std::vector<Tensor<S>>&, int);                        \
  template Tensor<S> transpose(const Tensor<S>&);

LITEMONO_INSTANTIATE_TENSOR(float)
LITEMONO_INSTANTIATE_TENSOR(double)

template Tensor<double> Tensor<float>::cast<double>() const;
template Tensor<float> Tensor<double>::cast<float>() const;
template Tensor<float> Tensor<float>::cast<float>() const;
template Tensor<double> Tensor<double>::cast<double>() const;

}  // namespace litemono
