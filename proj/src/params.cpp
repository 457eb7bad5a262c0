#include "litemono/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace litemono {

template <typename S>
Tensor<S>& ParameterStore<S>::add(const std::string& name, Tensor<S> value) {
  if (tensors_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  params_.push_back(name);
  return tensors_[name] = std::move(value);
}

template <typename S>
Tensor<S>& ParameterStore<S>::add_buffer(const std::string& name, Tensor<S> value) {
  if (tensors_.count(name)) throw std::invalid_argument("duplicate buffer '" + name + "'");
  buffers_.push_back(name);
  return tensors_[name] = std::move(value);
}

template <typename S>
Tensor<S>& ParameterStore<S>::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

template <typename S>
const Tensor<S>& ParameterStore<S>::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

template <typename S>
bool ParameterStore<S>::contains(const std::string& name) const {
  return tensors_.count(name) > 0;
}

template <typename S>
bool ParameterStore<S>::is_buffer(const std::string& name) const {
  return std::find(buffers_.begin(), buffers_.end(), name) != buffers_.end();
}

template <typename S>
std::vector<Tensor<S>> ParameterStore<S>::parameters() const {
  std::vector<Tensor<S>> out;
  for (const auto& n : params_) out.push_back(tensors_.at(n));
  return out;
}

template <typename S>
Index ParameterStore<S>::count() const {
  Index n = 0;
  for (const auto& name : params_) n += tensors_.at(name).numel();
  return n;
}

template <typename S>
Index ParameterStore<S>::count(const std::string& prefix) const {
  Index n = 0;
  for (const auto& name : params_)
    if (name.rfind(prefix, 0) == 0) n += tensors_.at(name).numel();
  return n;
}

template <typename S>
void ParameterStore<S>::set_requires_grad(bool flag) {
  for (const auto& name : params_) tensors_.at(name).set_requires_grad(flag);
}

template <typename S>
void ParameterStore<S>::zero_grad() {
  for (const auto& name : params_) tensors_.at(name).zero_grad();
}

template <typename S>
template <typename T>
ParameterStore<T> ParameterStore<S>::cast() const {
  ParameterStore<T> out;
  for (const auto& n : params_) out.add(n, tensors_.at(n).template cast<T>());
  for (const auto& n : buffers_) out.add_buffer(n, tensors_.at(n).template cast<T>());
  return out;
}

template <typename S>
Tensor<S>& ParamBuilder<S>::tensor(const std::string& name, Shape shape, Init init) {
  Tensor<S> t(shape);
  auto values = t.data();
  switch (init) {
    case Init::zeros:
      break;
    case Init::ones:
      for (auto& v : values) v = S(1);
      break;
    case Init::trunc_normal: {
      std::normal_distribution<double> n(0.0, 0.02);
      for (auto& v : values) {
        double s;
        do s = n(rng_);
        while (std::abs(s) > 0.04);
        v = static_cast<S>(s);
      }
      break;
    }
    case Init::fan_out_normal: {
      // shape [co, ci/groups, kh, kw]
      const double fan_out = static_cast<double>(shape[0] * shape[2] * shape[3]);
      std::normal_distribution<double> n(0.0, std::sqrt(2.0 / fan_out));
      for (auto& v : values) v = static_cast<S>(n(rng_));
      break;
    }
    case Init::fan_in_uniform: {
      const double fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
      const double bound = 1.0 / std::sqrt(fan_in);
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& v : values) v = static_cast<S>(u(rng_));
      break;
    }
  }
  return store_.add(name, std::move(t));
}

template <typename S>
void ParamBuilder<S>::conv(const std::string& prefix, Index ci, Index co, Index k, bool bias,
                           Index groups, bool zero_weight) {
  const Init init = zero_weight ? Init::zeros : (k == 1 ? Init::trunc_normal : conv_init_);
  tensor(prefix + ".weight", {co, ci / groups, k, k}, init);
  if (bias) tensor(prefix + ".bias", {co}, Init::zeros);
}

template <typename S>
void ParamBuilder<S>::batch_norm(const std::string& prefix, Index channels) {
  tensor(prefix + ".gamma", {channels}, Init::ones);
  tensor(prefix + ".beta", {channels}, Init::zeros);
  store_.add_buffer(prefix + ".running_mean", Tensor<S>({channels}, S(0)));
  store_.add_buffer(prefix + ".running_var", Tensor<S>({channels}, S(1)));
}

template <typename S>
void ParamBuilder<S>::layer_norm(const std::string& prefix, Index channels) {
  tensor(prefix + ".gamma", {channels}, Init::ones);
  tensor(prefix + ".beta", {channels}, Init::zeros);
}

template <typename S>
Tensor<S> conv(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
               const ConvSpec& spec) {
  const std::string b = prefix + ".bias";
  std::optional<Tensor<S>> bias;
  if (p.contains(b)) bias = p.at(b);
  return conv2d(x, p.at(prefix + ".weight"), bias, spec);
}

template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
                     bool training) {
  BatchNormState<S> st{p.at(prefix + ".gamma"), p.at(prefix + ".beta"),
                       p.at(prefix + ".running_mean"), p.at(prefix + ".running_var")};
  return batch_norm(x, st, training);
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class ParamBuilder<float>;
template class ParamBuilder<double>;
template ParameterStore<double> ParameterStore<float>::cast<double>() const;
template ParameterStore<float> ParameterStore<double>::cast<float>() const;
template ParameterStore<float> ParameterStore<float>::cast<float>() const;
template ParameterStore<double> ParameterStore<double>::cast<double>() const;
template Tensor<float> conv(const Tensor<float>&, ParameterStore<float>&, const std::string&,
                            const ConvSpec&);
template Tensor<double> conv(const Tensor<double>&, ParameterStore<double>&, const std::string&,
                             const ConvSpec&);
template Tensor<float> batch_norm(const Tensor<float>&, ParameterStore<float>&,
                                  const std::string&, bool);
template Tensor<double> batch_norm(const Tensor<double>&, ParameterStore<double>&,
                                   const std::string&, bool);

}  // namespace litemono
