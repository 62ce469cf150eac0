#include "tensor/tensor.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace schedsyn::tensor {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (const int d : shape) {
    if (d < 0) throw DataError("negative tensor extent");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
  data.assign(static_cast<size_t>(shape_numel(shape)), 0.0f);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(float value) {
  Tensor t;
  t.shape = {};
  t.data = {value};
  return t;
}

int64_t Tensor::row_size() const {
  if (shape.size() <= 1) return 1;
  int64_t n = 1;
  for (size_t i = 1; i < shape.size(); ++i) n *= shape[i];
  return n;
}

void Tensor::fill(float v) { std::fill(data.begin(), data.end(), v); }

double Tensor::sum64() const {
  double acc = 0.0;
  for (const float x : data) acc += x;
  return acc;
}

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace schedsyn::tensor
