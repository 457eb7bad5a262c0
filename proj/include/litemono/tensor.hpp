#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace litemono {

using Index = std::int64_t;
using Shape = std::vector<Index>;

/// Thrown for any tensor shape or axis inconsistency.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Index shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Gradient recording is on by default; NoGradGuard turns it off for the
/// current thread (inference, finite differences, evaluation).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

template <typename Scalar>
struct Node {
  Shape shape;
  std::vector<Scalar> data;
  std::vector<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), Scalar(0));
  }
  // Gradient buffer of parent i, or nullptr when that parent is not tracked.
  Scalar* parent_grad(std::size_t i) {
    Node& p = *parents[i];
    if (!p.requires_grad) return nullptr;
    p.ensure_grad();
    return p.grad.data();
  }
  const Scalar* parent_data(std::size_t i) const {
    return parents[i]->data.data();
  }
};

}  // namespace detail

/// Dense row-major n-dimensional array with optional reverse-mode gradient
/// tracking. Copies share the underlying node (handle semantics, like the
/// graph it participates in); use clone() for an independent copy.
template <typename Scalar>
class Tensor {
 public:
  using scalar_type = Scalar;
  using NodeType = detail::Node<Scalar>;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0));
  Tensor(Shape shape, std::vector<Scalar> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), Scalar(1)); }
  static Tensor full(Shape shape, Scalar v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(Scalar v) { return Tensor(Shape{}, v); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  /// Size along an axis; negative axes count from the end.
  Index dim(int axis) const;
  Index numel() const { return static_cast<Index>(node_->data.size()); }

  std::span<Scalar> data() { return node_->data; }
  std::span<const Scalar> data() const { return node_->data; }
  Scalar* ptr() { return node_->data.data(); }
  const Scalar* ptr() const { return node_->data.data(); }

  /// Element access by multi-index.
  Scalar& at(std::initializer_list<Index> idx);
  Scalar at(std::initializer_list<Index> idx) const;
  Scalar item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool flag = true);
  bool has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }
  std::span<Scalar> grad();
  std::span<const Scalar> grad() const;
  /// Gradient as a fresh tensor (zeros if none has been accumulated).
  Tensor grad_tensor() const;
  void zero_grad();

  /// Fresh leaf with a copy of the data and no history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; interior gradients are recomputed from zero each call.
  void backward() const;

  template <typename Other>
  Tensor<Other> cast() const;

  const std::shared_ptr<NodeType>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<NodeType> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  Index flat_index(std::initializer_list<Index> idx) const;

  std::shared_ptr<NodeType> node_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

namespace detail {

template <typename Scalar>
bool needs_grad(std::initializer_list<const Tensor<Scalar>*> inputs) {
  if (!grad_enabled()) return false;
  for (const auto* t : inputs)
    if (t && t->defined() && t->requires_grad()) return true;
  return false;
}

/// Records `fn` as the backward rule for `out` when any input is tracked.
template <typename Scalar>
void attach(Tensor<Scalar>& out, std::vector<Tensor<Scalar>> inputs,
            std::function<void(Node<Scalar>&)> fn) {
  bool track = grad_enabled();
  if (track) {
    track = false;
    for (const auto& t : inputs)
      if (t.defined() && t.requires_grad()) track = true;
  }
  if (!track) return;
  auto& node = *out.node();
  node.requires_grad = true;
  node.parents.reserve(inputs.size());
  for (auto& t : inputs) node.parents.push_back(t.node());
  node.backward = std::move(fn);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic with numpy-style broadcasting.

template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b);
/// Elementwise minimum; ties route the gradient to `a`.
template <typename S> Tensor<S> minimum(const Tensor<S>& a, const Tensor<S>& b);

template <typename S> Tensor<S> add_scalar(const Tensor<S>& a, S s);
template <typename S> Tensor<S> mul_scalar(const Tensor<S>& a, S s);
/// s - a
template <typename S> Tensor<S> rsub_scalar(const Tensor<S>& a, S s);

template <typename S> Tensor<S> neg(const Tensor<S>& x);
template <typename S> Tensor<S> exp(const Tensor<S>& x);
template <typename S> Tensor<S> log(const Tensor<S>& x);
template <typename S> Tensor<S> sqrt(const Tensor<S>& x);
template <typename S> Tensor<S> abs(const Tensor<S>& x);
template <typename S> Tensor<S> square(const Tensor<S>& x);
template <typename S> Tensor<S> reciprocal(const Tensor<S>& x);
/// Gradient passes only where lo < x < hi.
template <typename S> Tensor<S> clamp(const Tensor<S>& x, S lo, S hi);

template <typename S> Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) { return add(a, b); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b) { return sub(a, b); }
template <typename S> Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b) { return mul(a, b); }
template <typename S> Tensor<S> operator/(const Tensor<S>& a, const Tensor<S>& b) { return div(a, b); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a) { return neg(a); }
template <typename S> Tensor<S> operator+(const Tensor<S>& a, S s) { return add_scalar(a, s); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a, S s) { return add_scalar(a, -s); }
template <typename S> Tensor<S> operator*(const Tensor<S>& a, S s) { return mul_scalar(a, s); }
template <typename S> Tensor<S> operator*(S s, const Tensor<S>& a) { return mul_scalar(a, s); }
template <typename S> Tensor<S> operator-(S s, const Tensor<S>& a) { return rsub_scalar(a, s); }

// ---------------------------------------------------------------------------
// Reductions and shape manipulation.

template <typename S> Tensor<S> sum(const Tensor<S>& x);
template <typename S> Tensor<S> mean(const Tensor<S>& x);
template <typename S> Tensor<S> sum(const Tensor<S>& x, int axis, bool keepdim);
template <typename S> Tensor<S> mean(const Tensor<S>& x, int axis, bool keepdim);

template <typename S> Tensor<S> reshape(const Tensor<S>& x, Shape shape);
/// Contiguous sub-range [start, start + length) along one axis.
template <typename S> Tensor<S> slice(const Tensor<S>& x, int axis, Index start, Index length);
/// Concatenation along `axis`; a single input is returned unchanged.
template <typename S> Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis);
/// Matrix transpose of a rank-2 tensor.
template <typename S> Tensor<S> transpose(const Tensor<S>& x);

}  // namespace litemono
