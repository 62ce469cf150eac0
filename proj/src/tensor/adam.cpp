#include "tensor/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace schedsyn::tensor {

int ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  p.grad = Tensor::zeros(init.shape);
  p.value = std::move(init);
  p.trainable = trainable;
  const int idx = static_cast<int>(params_.size());
  params_.push_back(std::move(p));
  index_[name] = idx;
  return idx;
}

int ParamStore::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::logic_error("unknown parameter '" + name + "'");
  return it->second;
}

int64_t ParamStore::trainable_count() const {
  int64_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.value.numel();
  }
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p.grad.fill(0.0f);
}

void ParamStore::clip_grad_norm(double max_norm) {
  double sq = 0.0;
  for (const auto& p : params_) {
    if (!p.trainable) continue;
    for (const float g : p.grad.data) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (auto& p : params_) {
    if (!p.trainable) continue;
    for (float& g : p.grad.data) g *= scale;
  }
}

void adam_step(AdamState& state, ParamStore& params) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m[i] = Tensor::zeros(params.at(static_cast<int>(i)).value.shape);
      state.v[i] = Tensor::zeros(params.at(static_cast<int>(i)).value.shape);
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(static_cast<int>(i));
    if (!p.trainable) continue;
    if (state.m[i].shape != p.value.shape) {
      throw std::invalid_argument("adam_step: moment shape " + state.m[i].shape_str() +
                                  " vs parameter " + p.value.shape_str());
    }
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (int64_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.data[j];
      const double mj = state.beta1 * m.data[j] + (1.0 - state.beta1) * g;
      const double vj = state.beta2 * v.data[j] + (1.0 - state.beta2) * g * g;
      m.data[j] = static_cast<float>(mj);
      v.data[j] = static_cast<float>(vj);
      const double update = state.lr * (mj / bc1) / (std::sqrt(vj / bc2) + state.eps);
      p.value.data[j] = static_cast<float>(p.value.data[j] - update);
    }
  }
}

void init_he_uniform(Tensor& t, int fan_in, uint64_t seed, uint64_t tag) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  init_uniform(t, bound, seed, tag);
}

void init_uniform(Tensor& t, double bound, uint64_t seed, uint64_t tag) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    const double u = rng::uniform(rng::key(seed, rng::Stream::Init, tag, static_cast<uint64_t>(i)));
    t.data[i] = static_cast<float>((2.0 * u - 1.0) * bound);
  }
}

}  // namespace schedsyn::tensor
