#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core/rng.hpp"
#include "tensor/tape.hpp"
#include "tensor/tensor.hpp"

namespace schedsyn::testing {

// Central finite-difference gradient check at h = 1e-3 against the 64-bit
// loss (forward stays float32; reductions are read at full precision). Per
// input tensor the error is ||fd - an||_2 / max(||fd||_2, ||an||_2): the
// vector norm averages float32 forward noise out of near-zero entries while
// any real defect shifts the norm by the size of the gradient itself.
struct FdReport {
  double max_rel_err = 0.0;
  int64_t checked = 0;
};

using BuildFn = std::function<tensor::NodeId(tensor::Tape&, std::vector<tensor::NodeId>&)>;

inline double loss_of(std::vector<tensor::Tensor> inputs, const BuildFn& build) {
  tensor::Tape tape;
  std::vector<tensor::NodeId> ids;
  ids.reserve(inputs.size());
  for (auto& t : inputs) ids.push_back(tape.input(std::move(t)));
  return tape.val64(build(tape, ids));
}

inline FdReport fd_check(const std::vector<tensor::Tensor>& inputs, const BuildFn& build,
                         double h = 1e-3) {
  tensor::Tape tape;
  std::vector<tensor::NodeId> ids;
  for (const auto& t : inputs) ids.push_back(tape.input(t));
  const auto loss = build(tape, ids);
  tape.backward(loss);

  FdReport report;
  for (size_t which = 0; which < inputs.size(); ++which) {
    const tensor::Tensor& analytic = tape.grad(ids[which]);
    double diff_sq = 0.0, fd_sq = 0.0, an_sq = 0.0;
    for (int64_t j = 0; j < inputs[which].numel(); ++j) {
      auto perturbed = inputs;
      perturbed[which].data[j] += static_cast<float>(h);
      const double up = loss_of(perturbed, build);
      perturbed[which].data[j] -= static_cast<float>(2 * h);
      const double down = loss_of(perturbed, build);
      const double fd = (up - down) / (2 * h);
      const double an = analytic.data[j];
      diff_sq += (fd - an) * (fd - an);
      fd_sq += fd * fd;
      an_sq += an * an;
      ++report.checked;
    }
    const double denom = std::sqrt(std::max(fd_sq, an_sq));
    const double err = denom > 0.0 ? std::sqrt(diff_sq) / denom : std::sqrt(diff_sq);
    report.max_rel_err = std::max(report.max_rel_err, err);
  }
  return report;
}

inline tensor::Tensor random_tensor(std::vector<int> shape, rng::Sequence& rng,
                                    double scale = 1.0) {
  tensor::Tensor t(std::move(shape));
  for (auto& x : t.data) x = static_cast<float>((rng.uniform01() * 2.0 - 1.0) * scale);
  return t;
}

// Scalarising head: a fixed random weighted sum makes every output element
// matter in the loss.
inline tensor::NodeId weighted_sum(tensor::Tape& tape, tensor::NodeId x, uint64_t seed) {
  const auto& v = tape.val(x);
  tensor::Tensor w(v.shape);
  rng::Sequence rng(seed);
  for (auto& e : w.data) e = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
  return tape.sum(tape.mul(x, tape.value(std::move(w))));
}

}  // namespace schedsyn::testing
