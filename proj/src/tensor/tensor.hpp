#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace schedsyn::tensor {

// Dense row-major float32 array. Reduction helpers accumulate in double.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_in);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, float value);
  static Tensor scalar(float value);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int dim(size_t i) const { return shape[i]; }
  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return data.size() == 1; }

  // Product of all dimensions except the first (1 for rank <= 1).
  int64_t row_size() const;

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  void fill(float v);
  double sum64() const;

  std::string shape_str() const;
};

int64_t shape_numel(const std::vector<int>& shape);

// Integer companion for token ids and class targets; never differentiated.
struct IntArray {
  std::vector<int> shape;
  std::vector<int32_t> data;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
};

}  // namespace schedsyn::tensor
