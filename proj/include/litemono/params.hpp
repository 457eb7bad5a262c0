#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "litemono/ops.hpp"
#include "litemono/tensor.hpp"

namespace litemono {

enum class Init { zeros, ones, trunc_normal, fan_out_normal, fan_in_uniform };

/// Named trainable tensors plus non-trainable buffers (batch norm running
/// statistics). Insertion order is kept so iteration is deterministic.
template <typename S>
class ParameterStore {
 public:
  Tensor<S>& add(const std::string& name, Tensor<S> value);
  Tensor<S>& add_buffer(const std::string& name, Tensor<S> value);

  /// Throws std::out_of_range naming the missing key.
  Tensor<S>& at(const std::string& name);
  const Tensor<S>& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  bool is_buffer(const std::string& name) const;

  const std::vector<std::string>& names() const { return params_; }
  const std::vector<std::string>& buffer_names() const { return buffers_; }
  std::vector<Tensor<S>> parameters() const;

  /// Trainable scalar count.
  Index count() const;
  Index count(const std::string& prefix) const;

  void set_requires_grad(bool flag);
  void zero_grad();

  /// Deep copy with the scalar type converted.
  template <typename T>
  ParameterStore<T> cast() const;

  /// Deep copy (no shared nodes).
  ParameterStore clone() const { return cast<S>(); }

 private:
  std::map<std::string, Tensor<S>> tensors_;
  std::vector<std::string> params_;
  std::vector<std::string> buffers_;
};

/// Declares parameters into a store with the chosen initializers.
template <typename S>
class ParamBuilder {
 public:
  ParamBuilder(ParameterStore<S>& store, std::uint64_t seed) : store_(store), rng_(seed) {}

  Tensor<S>& tensor(const std::string& name, Shape shape, Init init);
  /// Conv weight [co, ci/groups, k, k] and an optional bias. 1x1 kernels get
  /// the projection init (truncated normal), others conv_init();
  /// zero_weight forces an all-zero weight.
  void conv(const std::string& prefix, Index ci, Index co, Index k, bool bias, Index groups = 1,
            bool zero_weight = false);
  void batch_norm(const std::string& prefix, Index channels);
  void layer_norm(const std::string& prefix, Index channels);

  ParameterStore<S>& store() { return store_; }
  /// Init used by conv() for kernels wider than 1x1.
  void set_conv_init(Init init) { conv_init_ = init; }
  Init conv_init() const { return conv_init_; }

 private:
  ParameterStore<S>& store_;
  std::mt19937_64 rng_;
  Init conv_init_ = Init::fan_out_normal;
};

/// Convolution reading "prefix.weight" and, when present, "prefix.bias".
template <typename S>
Tensor<S> conv(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
               const ConvSpec& spec);

/// Batch norm reading gamma/beta and the running buffers under prefix.
template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
                     bool training);

}  // namespace litemono
