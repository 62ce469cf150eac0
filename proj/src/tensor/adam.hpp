#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"

namespace schedsyn::tensor {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;  // false for batchnorm running stats
};

// Named parameter registry. Gradients live here between backward and the
// optimizer step; a training step owns the store exclusively.
class ParamStore {
 public:
  int add(const std::string& name, Tensor init, bool trainable = true);
  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Parameter& at(int i) { return params_[static_cast<size_t>(i)]; }
  const Parameter& at(int i) const { return params_[static_cast<size_t>(i)]; }
  Parameter& named(const std::string& name) { return params_[static_cast<size_t>(index_of(name))]; }
  const Parameter& named(const std::string& name) const {
    return params_[static_cast<size_t>(index_of(name))];
  }

  size_t size() const { return params_.size(); }
  int64_t trainable_count() const;

  void zero_grads();
  // Scales gradients so their global L2 norm is at most `max_norm`.
  void clip_grad_norm(double max_norm);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, int> index_;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<Tensor> m;  // first moments, parallel to the store
  std::vector<Tensor> v;  // second moments
};

// Standard Adam update with bias correction over all trainable parameters.
void adam_step(AdamState& state, ParamStore& params);

// Deterministic initialisers; element k of the tensor draws from
// key(seed, Init, tag, k).
void init_he_uniform(Tensor& t, int fan_in, uint64_t seed, uint64_t tag);
void init_uniform(Tensor& t, double bound, uint64_t seed, uint64_t tag);

}  // namespace schedsyn::tensor
