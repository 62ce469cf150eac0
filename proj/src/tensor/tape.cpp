#include "tensor/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "tensor/gemm.hpp"

namespace schedsyn::tensor {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shapes " + a.shape_str() + " vs " +
                              b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw std::invalid_argument(std::string(op) + ": " + detail);
}

int ceil_div_pos(int a, int b) { return (a + b - 1) / b; }

struct ConvRange {
  int first = 0;  // first valid output (conv) / input (deconv) position
  int count = 0;
};

// Valid o with 0 <= o*s - p + k <= in_len-1, clipped to [0, out_len).
ConvRange window_range(int in_len, int out_len, int stride, int pad, int k) {
  int lo = 0;
  if (pad - k > 0) lo = ceil_div_pos(pad - k, stride);
  const int num = in_len - 1 + pad - k;
  if (num < 0) return {0, 0};
  const int hi = std::min(out_len - 1, num / stride);
  if (hi < lo) return {0, 0};
  return {lo, hi - lo + 1};
}

double dropout_uniform(uint64_t key_base, int64_t sample, int64_t elem) {
  const uint64_t k = rng::mix(rng::mix(key_base ^ static_cast<uint64_t>(sample)) ^
                              static_cast<uint64_t>(elem));
  return rng::uniform(k);
}

constexpr double kProbFloor = 1e-12;

}  // namespace

int conv1d_out_len(int len, int kernel, int stride, int pad) {
  const int raw = len + 2 * pad - kernel;
  if (raw < 0) return 1;
  return raw / stride + 1;
}

DeconvGeometry deconv1d_geometry(int in_len, int target_len, int kernel, int stride) {
  const int base = (in_len - 1) * stride + kernel - target_len;
  DeconvGeometry g;
  if (base >= 0 && base % 2 == 0) {
    g.pad = base / 2;
    g.out_pad = 0;
  } else if (base >= -1) {
    g.pad = (base + 1) / 2;
    g.out_pad = 1;
  } else {
    shape_error("deconv1d", "cannot reach length " + std::to_string(target_len) +
                                " from " + std::to_string(in_len));
  }
  return g;
}

std::vector<int> argmax_last(const Tensor& t) {
  if (t.shape.empty()) throw std::invalid_argument("argmax_last: scalar input");
  const int v = t.shape.back();
  const int64_t rows = t.numel() / v;
  std::vector<int> out(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const float* row = t.ptr() + r * v;
    int best = 0;
    for (int j = 1; j < v; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

Tensor& Tape::gbuf(NodeId id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) {
    n.grad = Tensor::zeros(n.value().shape);
    n.grad_alloc = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(NodeId id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) throw std::logic_error("grad: node has no gradient (run backward first)");
  return n.grad;
}

double Tape::val64(NodeId id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (n.has_scalar64) return n.scalar64;
  if (!n.value().is_scalar()) throw std::logic_error("val64: node is not a scalar");
  return static_cast<double>(n.value().data[0]);
}

NodeId Tape::push(Tensor value, std::vector<NodeId> parents,
                  std::function<void(Tape&, const Tensor&)> back) {
  Node n;
  n.owned = std::move(value);
  for (const NodeId p : parents) {
    if (p != kNoNode && wants(p)) n.needs_grad = true;
  }
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::value(Tensor v) {
  Node n;
  n.owned = std::move(v);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::input(Tensor v) {
  Node n;
  n.owned = std::move(v);
  n.needs_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::param(const Tensor* external) {
  Node n;
  n.external = external;
  n.needs_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::backward(NodeId loss) {
  if (backward_done_) {
    throw std::logic_error("backward: tape already differentiated; run a new forward");
  }
  if (!nodes_[static_cast<size_t>(loss)].value().is_scalar()) {
    throw std::logic_error("backward: loss is not a scalar, shape " +
                           nodes_[static_cast<size_t>(loss)].value().shape_str());
  }
  backward_done_ = true;
  gbuf(loss).data[0] = 1.0f;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad_alloc && n.back) n.back(*this, n.grad);
  }
}

// ---- elementwise & shape ----

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (va.shape != vb.shape) shape_error("add", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = va.data[i] + vb.data[i];
  const NodeId id = push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.wants(a)) {
      Tensor& da = t.gbuf(a);
      for (int64_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
    }
    if (t.wants(b)) {
      Tensor& db = t.gbuf(b);
      for (int64_t i = 0; i < g.numel(); ++i) db.data[i] += g.data[i];
    }
  });
  if (va.is_scalar()) mark_scalar64(id, val64(a) + val64(b));
  return id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (va.shape != vb.shape) shape_error("sub", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = va.data[i] - vb.data[i];
  const NodeId id = push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.wants(a)) {
      Tensor& da = t.gbuf(a);
      for (int64_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
    }
    if (t.wants(b)) {
      Tensor& db = t.gbuf(b);
      for (int64_t i = 0; i < g.numel(); ++i) db.data[i] -= g.data[i];
    }
  });
  if (va.is_scalar()) mark_scalar64(id, val64(a) - val64(b));
  return id;
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (va.shape != vb.shape) shape_error("mul", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = va.data[i] * vb.data[i];
  const NodeId id = push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    if (t.wants(a)) {
      Tensor& da = t.gbuf(a);
      for (int64_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i] * vb.data[i];
    }
    if (t.wants(b)) {
      Tensor& db = t.gbuf(b);
      for (int64_t i = 0; i < g.numel(); ++i) db.data[i] += g.data[i] * va.data[i];
    }
  });
  if (va.is_scalar()) mark_scalar64(id, val64(a) * val64(b));
  return id;
}

NodeId Tape::affine(NodeId x, float scale, float shift) {
  const Tensor& vx = val(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = vx.data[i] * scale + shift;
  const NodeId id = push(std::move(y), {x}, [x, scale](Tape& t, const Tensor& g) {
    if (!t.wants(x)) return;
    Tensor& dx = t.gbuf(x);
    for (int64_t i = 0; i < g.numel(); ++i) dx.data[i] += g.data[i] * scale;
  });
  if (vx.is_scalar()) {
    mark_scalar64(id, val64(x) * static_cast<double>(scale) + static_cast<double>(shift));
  }
  return id;
}

NodeId Tape::exp(NodeId x) {
  const Tensor& vx = val(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = std::exp(vx.data[i]);
  const NodeId id = push(std::move(y), {x}, nullptr);
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.needs_grad) {
    n.back = [x, id](Tape& t, const Tensor& g) {
      if (!t.wants(x)) return;
      const Tensor& y = t.val(id);
      Tensor& dx = t.gbuf(x);
      for (int64_t i = 0; i < g.numel(); ++i) dx.data[i] += g.data[i] * y.data[i];
    };
  }
  return id;
}

NodeId Tape::sum(NodeId x) {
  const Tensor& vx = val(x);
  const int64_t n = vx.numel();
  const double acc = vx.sum64();
  const NodeId id = push(Tensor::scalar(static_cast<float>(acc)), {x},
                         [x, n](Tape& t, const Tensor& g) {
                           if (!t.wants(x)) return;
                           Tensor& dx = t.gbuf(x);
                           const float gs = g.data[0];
                           for (int64_t i = 0; i < n; ++i) dx.data[i] += gs;
                         });
  mark_scalar64(id, acc);
  return id;
}

NodeId Tape::mean(NodeId x) {
  const Tensor& vx = val(x);
  const int64_t n = vx.numel();
  if (n == 0) shape_error("mean", "empty tensor");
  const double acc = vx.sum64() / static_cast<double>(n);
  const NodeId id = push(Tensor::scalar(static_cast<float>(acc)), {x},
                         [x, n](Tape& t, const Tensor& g) {
                           if (!t.wants(x)) return;
                           Tensor& dx = t.gbuf(x);
                           const float gs = g.data[0] / static_cast<float>(n);
                           for (int64_t i = 0; i < n; ++i) dx.data[i] += gs;
                         });
  mark_scalar64(id, acc);
  return id;
}

NodeId Tape::reshape(NodeId x, std::vector<int> shape) {
  const Tensor& vx = val(x);
  if (shape_numel(shape) != vx.numel()) {
    std::string want = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) want += ",";
      want += std::to_string(shape[i]);
    }
    shape_error("reshape", "cannot view " + vx.shape_str() + " as " + want + ")");
  }
  Tensor y = vx;
  y.shape = std::move(shape);
  return push(std::move(y), {x}, [x](Tape& t, const Tensor& g) {
    if (!t.wants(x)) return;
    Tensor& dx = t.gbuf(x);
    for (int64_t i = 0; i < g.numel(); ++i) dx.data[i] += g.data[i];
  });
}

NodeId Tape::concat_last(NodeId a, NodeId b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (va.shape.empty() || vb.shape.empty() ||
      std::vector<int>(va.shape.begin(), va.shape.end() - 1) !=
          std::vector<int>(vb.shape.begin(), vb.shape.end() - 1)) {
    shape_error("concat_last", va, vb);
  }
  const int fa = va.shape.back();
  const int fb = vb.shape.back();
  const int64_t rows = va.numel() / fa;
  std::vector<int> shape(va.shape.begin(), va.shape.end() - 1);
  shape.push_back(fa + fb);
  Tensor y(std::move(shape));
  for (int64_t r = 0; r < rows; ++r) {
    std::copy_n(va.ptr() + r * fa, fa, y.ptr() + r * (fa + fb));
    std::copy_n(vb.ptr() + r * fb, fb, y.ptr() + r * (fa + fb) + fa);
  }
  return push(std::move(y), {a, b}, [a, b, fa, fb, rows](Tape& t, const Tensor& g) {
    if (t.wants(a)) {
      Tensor& da = t.gbuf(a);
      for (int64_t r = 0; r < rows; ++r) {
        const float* src = g.ptr() + r * (fa + fb);
        float* dst = da.ptr() + r * fa;
        for (int j = 0; j < fa; ++j) dst[j] += src[j];
      }
    }
    if (t.wants(b)) {
      Tensor& db = t.gbuf(b);
      for (int64_t r = 0; r < rows; ++r) {
        const float* src = g.ptr() + r * (fa + fb) + fa;
        float* dst = db.ptr() + r * fb;
        for (int j = 0; j < fb; ++j) dst[j] += src[j];
      }
    }
  });
}

NodeId Tape::slice_last(NodeId x, int from, int to) {
  const Tensor& vx = val(x);
  const int f = vx.shape.back();
  if (from < 0 || to > f || from >= to) {
    shape_error("slice_last", "range [" + std::to_string(from) + "," + std::to_string(to) +
                                  ") of width " + std::to_string(f));
  }
  const int width = to - from;
  const int64_t rows = vx.numel() / f;
  std::vector<int> shape(vx.shape.begin(), vx.shape.end() - 1);
  shape.push_back(width);
  Tensor y(std::move(shape));
  for (int64_t r = 0; r < rows; ++r) {
    std::copy_n(vx.ptr() + r * f + from, width, y.ptr() + r * width);
  }
  return push(std::move(y), {x}, [x, from, f, width, rows](Tape& t, const Tensor& g) {
    if (!t.wants(x)) return;
    Tensor& dx = t.gbuf(x);
    for (int64_t r = 0; r < rows; ++r) {
      const float* src = g.ptr() + r * width;
      float* dst = dx.ptr() + r * f + from;
      for (int j = 0; j < width; ++j) dst[j] += src[j];
    }
  });
}

NodeId Tape::stack_steps(const std::vector<NodeId>& steps) {
  if (steps.empty()) shape_error("stack_steps", "no steps");
  const Tensor& first = val(steps[0]);
  if (first.rank() != 2) shape_error("stack_steps", "steps must be rank 2");
  const int batch = first.shape[0];
  const int width = first.shape[1];
  const int t_count = static_cast<int>(steps.size());
  Tensor y({batch, t_count, width});
  for (int t = 0; t < t_count; ++t) {
    const Tensor& vt = val(steps[static_cast<size_t>(t)]);
    if (vt.shape != first.shape) shape_error("stack_steps", first, vt);
    for (int b = 0; b < batch; ++b) {
      std::copy_n(vt.ptr() + static_cast<int64_t>(b) * width, width,
                  y.ptr() + (static_cast<int64_t>(b) * t_count + t) * width);
    }
  }
  return push(std::move(y), steps, [steps, batch, width, t_count](Tape& t, const Tensor& g) {
    for (int step = 0; step < t_count; ++step) {
      const NodeId sid = steps[static_cast<size_t>(step)];
      if (!t.wants(sid)) continue;
      Tensor& ds = t.gbuf(sid);
      for (int b = 0; b < batch; ++b) {
        const float* src = g.ptr() + (static_cast<int64_t>(b) * t_count + step) * width;
        float* dst = ds.ptr() + static_cast<int64_t>(b) * width;
        for (int j = 0; j < width; ++j) dst[j] += src[j];
      }
    }
  });
}

NodeId Tape::slice_step(NodeId x, int t) {
  const Tensor& vx = val(x);
  if (vx.rank() != 3 || t < 0 || t >= vx.shape[1]) {
    shape_error("slice_step", "step " + std::to_string(t) + " of " + vx.shape_str());
  }
  const int batch = vx.shape[0];
  const int t_count = vx.shape[1];
  const int width = vx.shape[2];
  Tensor y({batch, width});
  for (int b = 0; b < batch; ++b) {
    std::copy_n(vx.ptr() + (static_cast<int64_t>(b) * t_count + t) * width, width,
                y.ptr() + static_cast<int64_t>(b) * width);
  }
  return push(std::move(y), {x}, [x, t, batch, t_count, width](Tape& tp, const Tensor& g) {
    if (!tp.wants(x)) return;
    Tensor& dx = tp.gbuf(x);
    for (int b = 0; b < batch; ++b) {
      const float* src = g.ptr() + static_cast<int64_t>(b) * width;
      float* dst = dx.ptr() + (static_cast<int64_t>(b) * t_count + t) * width;
      for (int j = 0; j < width; ++j) dst[j] += src[j];
    }
  });
}

// ---- layers ----

NodeId Tape::linear(NodeId x, NodeId w, NodeId b) {
  const Tensor& vx = val(x);
  const Tensor& vw = val(w);
  if (vw.rank() != 2 || vx.shape.empty() || vx.shape.back() != vw.shape[0]) {
    shape_error("linear", vx, vw);
  }
  const int fin = vw.shape[0];
  const int fout = vw.shape[1];
  const int64_t rows = vx.numel() / fin;
  if (b != kNoNode) {
    const Tensor& vb = val(b);
    if (vb.numel() != fout) shape_error("linear bias", vb, vw);
  }

  std::vector<int> shape(vx.shape.begin(), vx.shape.end() - 1);
  shape.push_back(fout);
  Tensor y(std::move(shape));
  if (b != kNoNode) {
    const Tensor& vb = val(b);
    for (int64_t r = 0; r < rows; ++r) {
      std::copy_n(vb.ptr(), fout, y.ptr() + r * fout);
    }
  }
  gemm_nn(static_cast<int>(rows), fout, fin, vx.ptr(), fin, vw.ptr(), fout, y.ptr(), fout);

  return push(std::move(y), {x, w, b}, [x, w, b, rows, fin, fout](Tape& t, const Tensor& g) {
    const Tensor& vx = t.val(x);
    const Tensor& vw = t.val(w);
    if (t.wants(x)) {
      gemm_nt(static_cast<int>(rows), fin, fout, g.ptr(), fout, vw.ptr(), fout,
              t.gbuf(x).ptr(), fin);
    }
    if (t.wants(w)) {
      gemm_tn(fin, fout, static_cast<int>(rows), vx.ptr(), fin, g.ptr(), fout,
              t.gbuf(w).ptr(), fout);
    }
    if (b != kNoNode && t.wants(b)) {
      Tensor& db = t.gbuf(b);
      for (int64_t r = 0; r < rows; ++r) {
        const float* src = g.ptr() + r * fout;
        for (int j = 0; j < fout; ++j) db.data[j] += src[j];
      }
    }
  });
}

NodeId Tape::embedding(const IntArray& tokens, NodeId table) {
  const Tensor& vt = val(table);
  if (vt.rank() != 2) shape_error("embedding", "table must be rank 2");
  const int vocab = vt.shape[0];
  const int width = vt.shape[1];
  for (const int32_t tok : tokens.data) {
    if (tok < 0 || tok >= vocab) {
      throw DataError("embedding: unknown token " + std::to_string(tok) + " (vocab " +
                      std::to_string(vocab) + ")");
    }
  }
  std::vector<int> shape = tokens.shape;
  shape.push_back(width);
  Tensor y(std::move(shape));
  for (size_t i = 0; i < tokens.data.size(); ++i) {
    std::copy_n(vt.ptr() + static_cast<int64_t>(tokens.data[i]) * width, width,
                y.ptr() + static_cast<int64_t>(i) * width);
  }
  IntArray toks = tokens;
  return push(std::move(y), {table},
              [table, toks = std::move(toks), width](Tape& t, const Tensor& g) {
                if (!t.wants(table)) return;
                Tensor& dt = t.gbuf(table);
                for (size_t i = 0; i < toks.data.size(); ++i) {
                  const float* src = g.ptr() + static_cast<int64_t>(i) * width;
                  float* dst = dt.ptr() + static_cast<int64_t>(toks.data[i]) * width;
                  for (int j = 0; j < width; ++j) dst[j] += src[j];
                }
              });
}

NodeId Tape::leaky_relu(NodeId x, float slope) {
  const Tensor& vx = val(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.numel(); ++i) {
    const float v = vx.data[i];
    y.data[i] = v > 0.0f ? v : slope * v;
  }
  return push(std::move(y), {x}, [x, slope](Tape& t, const Tensor& g) {
    if (!t.wants(x)) return;
    const Tensor& vx = t.val(x);
    Tensor& dx = t.gbuf(x);
    for (int64_t i = 0; i < g.numel(); ++i) {
      dx.data[i] += g.data[i] * (vx.data[i] > 0.0f ? 1.0f : slope);
    }
  });
}

NodeId Tape::sigmoid(NodeId x) {
  const Tensor& vx = val(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.numel(); ++i) {
    y.data[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(vx.data[i]))));
  }
  const NodeId id = push(std::move(y), {x}, nullptr);
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.needs_grad) {
    n.back = [x, id](Tape& t, const Tensor& g) {
      if (!t.wants(x)) return;
      const Tensor& y = t.val(id);
      Tensor& dx = t.gbuf(x);
      for (int64_t i = 0; i < g.numel(); ++i) {
        dx.data[i] += g.data[i] * y.data[i] * (1.0f - y.data[i]);
      }
    };
  }
  return id;
}

NodeId Tape::softmax_last(NodeId x) {
  const Tensor& vx = val(x);
  if (vx.shape.empty()) shape_error("softmax", "scalar input");
  const int v = vx.shape.back();
  const int64_t rows = vx.numel() / v;
  Tensor y(vx.shape);
  for (int64_t r = 0; r < rows; ++r) {
    const float* in = vx.ptr() + r * v;
    float* out = y.ptr() + r * v;
    float m = in[0];
    for (int j = 1; j < v; ++j) m = std::max(m, in[j]);
    double total = 0.0;
    for (int j = 0; j < v; ++j) total += std::exp(static_cast<double>(in[j] - m));
    for (int j = 0; j < v; ++j) {
      out[j] = static_cast<float>(std::exp(static_cast<double>(in[j] - m)) / total);
    }
  }
  const NodeId id = push(std::move(y), {x}, nullptr);
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.needs_grad) {
    n.back = [x, id, v, rows](Tape& t, const Tensor& g) {
      if (!t.wants(x)) return;
      const Tensor& y = t.val(id);
      Tensor& dx = t.gbuf(x);
      for (int64_t r = 0; r < rows; ++r) {
        const float* yr = y.ptr() + r * v;
        const float* gr = g.ptr() + r * v;
        float* dr = dx.ptr() + r * v;
        double dot = 0.0;
        for (int j = 0; j < v; ++j) dot += static_cast<double>(gr[j]) * yr[j];
        for (int j = 0; j < v; ++j) {
          dr[j] += static_cast<float>(yr[j] * (static_cast<double>(gr[j]) - dot));
        }
      }
    };
  }
  return id;
}

NodeId Tape::conv1d(NodeId x, NodeId w, NodeId b, int stride, int pad) {
  const Tensor& vx = val(x);
  const Tensor& vw = val(w);
  if (vx.rank() != 3 || vw.rank() != 3 || vx.shape[2] != vw.shape[1]) {
    shape_error("conv1d", vx, vw);
  }
  const int batch = vx.shape[0];
  const int lin = vx.shape[1];
  const int cin = vx.shape[2];
  const int kernel = vw.shape[0];
  const int cout = vw.shape[2];
  const int lout = conv1d_out_len(lin, kernel, stride, pad);

  Tensor y({batch, lout, cout});
  for (int bi = 0; bi < batch; ++bi) {
    for (int k = 0; k < kernel; ++k) {
      const auto r = window_range(lin, lout, stride, pad, k);
      if (r.count == 0) continue;
      const int i0 = r.first * stride - pad + k;
      gemm_nn(r.count, cout, cin,
              vx.ptr() + (static_cast<int64_t>(bi) * lin + i0) * cin, stride * cin,
              vw.ptr() + static_cast<int64_t>(k) * cin * cout, cout,
              y.ptr() + (static_cast<int64_t>(bi) * lout + r.first) * cout, cout);
    }
  }
  if (b != kNoNode) {
    const Tensor& vb = val(b);
    if (vb.numel() != cout) shape_error("conv1d bias", vb, vw);
    for (int64_t r = 0; r < static_cast<int64_t>(batch) * lout; ++r) {
      float* row = y.ptr() + r * cout;
      for (int j = 0; j < cout; ++j) row[j] += vb.data[j];
    }
  }

  return push(std::move(y), {x, w, b},
              [=](Tape& t, const Tensor& g) {
                const Tensor& vx = t.val(x);
                const Tensor& vw = t.val(w);
                const bool wx = t.wants(x);
                const bool ww = t.wants(w);
                if (wx || ww) {
                  Tensor* dx = wx ? &t.gbuf(x) : nullptr;
                  Tensor* dw = ww ? &t.gbuf(w) : nullptr;
                  for (int bi = 0; bi < batch; ++bi) {
                    for (int k = 0; k < kernel; ++k) {
                      const auto r = window_range(lin, lout, stride, pad, k);
                      if (r.count == 0) continue;
                      const int i0 = r.first * stride - pad + k;
                      const float* grows =
                          g.ptr() + (static_cast<int64_t>(bi) * lout + r.first) * cout;
                      if (dx) {
                        gemm_nt(r.count, cin, cout, grows, cout,
                                vw.ptr() + static_cast<int64_t>(k) * cin * cout, cout,
                                dx->ptr() + (static_cast<int64_t>(bi) * lin + i0) * cin,
                                stride * cin);
                      }
                      if (dw) {
                        gemm_tn(cin, cout, r.count,
                                vx.ptr() + (static_cast<int64_t>(bi) * lin + i0) * cin,
                                stride * cin, grows, cout,
                                dw->ptr() + static_cast<int64_t>(k) * cin * cout, cout);
                      }
                    }
                  }
                }
                if (b != kNoNode && t.wants(b)) {
                  Tensor& db = t.gbuf(b);
                  for (int64_t r = 0; r < static_cast<int64_t>(batch) * lout; ++r) {
                    const float* row = g.ptr() + r * cout;
                    for (int j = 0; j < cout; ++j) db.data[j] += row[j];
                  }
                }
              });
}

NodeId Tape::deconv1d(NodeId x, NodeId w, NodeId b, int stride, int pad, int out_pad) {
  const Tensor& vx = val(x);
  const Tensor& vw = val(w);
  if (vx.rank() != 3 || vw.rank() != 3 || vx.shape[2] != vw.shape[1]) {
    shape_error("deconv1d", vx, vw);
  }
  const int batch = vx.shape[0];
  const int lin = vx.shape[1];
  const int cin = vx.shape[2];
  const int kernel = vw.shape[0];
  const int cout = vw.shape[2];
  const int lout = (lin - 1) * stride - 2 * pad + kernel + out_pad;
  if (lout < 1) shape_error("deconv1d", "output length < 1");

  Tensor y({batch, lout, cout});
  for (int bi = 0; bi < batch; ++bi) {
    for (int k = 0; k < kernel; ++k) {
      // i contributes to o = i*stride - pad + k.
      const auto r = window_range(lout, lin, stride, pad, k);
      if (r.count == 0) continue;
      const int o0 = r.first * stride - pad + k;
      gemm_nn(r.count, cout, cin,
              vx.ptr() + (static_cast<int64_t>(bi) * lin + r.first) * cin, cin,
              vw.ptr() + static_cast<int64_t>(k) * cin * cout, cout,
              y.ptr() + (static_cast<int64_t>(bi) * lout + o0) * cout, stride * cout);
    }
  }
  if (b != kNoNode) {
    const Tensor& vb = val(b);
    if (vb.numel() != cout) shape_error("deconv1d bias", vb, vw);
    for (int64_t r = 0; r < static_cast<int64_t>(batch) * lout; ++r) {
      float* row = y.ptr() + r * cout;
      for (int j = 0; j < cout; ++j) row[j] += vb.data[j];
    }
  }

  return push(std::move(y), {x, w, b},
              [=](Tape& t, const Tensor& g) {
                const Tensor& vx = t.val(x);
                const Tensor& vw = t.val(w);
                const bool wx = t.wants(x);
                const bool ww = t.wants(w);
                if (wx || ww) {
                  Tensor* dx = wx ? &t.gbuf(x) : nullptr;
                  Tensor* dw = ww ? &t.gbuf(w) : nullptr;
                  for (int bi = 0; bi < batch; ++bi) {
                    for (int k = 0; k < kernel; ++k) {
                      const auto r = window_range(lout, lin, stride, pad, k);
                      if (r.count == 0) continue;
                      const int o0 = r.first * stride - pad + k;
                      const float* grows =
                          g.ptr() + (static_cast<int64_t>(bi) * lout + o0) * cout;
                      if (dx) {
                        gemm_nt(r.count, cin, cout, grows, stride * cout,
                                vw.ptr() + static_cast<int64_t>(k) * cin * cout, cout,
                                dx->ptr() + (static_cast<int64_t>(bi) * lin + r.first) * cin,
                                cin);
                      }
                      if (dw) {
                        gemm_tn(cin, cout, r.count,
                                vx.ptr() + (static_cast<int64_t>(bi) * lin + r.first) * cin,
                                cin, grows, stride * cout,
                                dw->ptr() + static_cast<int64_t>(k) * cin * cout, cout);
                      }
                    }
                  }
                }
                if (b != kNoNode && t.wants(b)) {
                  Tensor& db = t.gbuf(b);
                  for (int64_t r = 0; r < static_cast<int64_t>(batch) * lout; ++r) {
                    const float* row = g.ptr() + r * cout;
                    for (int j = 0; j < cout; ++j) db.data[j] += row[j];
                  }
                }
              });
}

NodeId Tape::batchnorm(NodeId x, NodeId gamma, NodeId beta, Tensor& running_mean,
                       Tensor& running_var, bool train, float momentum, float eps) {
  const Tensor& vx = val(x);
  const int c = vx.shape.back();
  const int64_t m = vx.numel() / c;
  const Tensor& vg = val(gamma);
  const Tensor& vb = val(beta);
  if (vg.numel() != c || vb.numel() != c || running_mean.numel() != c ||
      running_var.numel() != c) {
    shape_error("batchnorm", vx, vg);
  }

  std::vector<double> mean(c, 0.0), inv(c, 0.0);
  if (train) {
    if (m < 2) shape_error("batchnorm", "training needs at least 2 rows");
    std::vector<double> var(c, 0.0);
    for (int64_t r = 0; r < m; ++r) {
      const float* row = vx.ptr() + r * c;
      for (int j = 0; j < c; ++j) mean[j] += row[j];
    }
    for (int j = 0; j < c; ++j) mean[j] /= static_cast<double>(m);
    for (int64_t r = 0; r < m; ++r) {
      const float* row = vx.ptr() + r * c;
      for (int j = 0; j < c; ++j) {
        const double d = row[j] - mean[j];
        var[j] += d * d;
      }
    }
    for (int j = 0; j < c; ++j) {
      var[j] /= static_cast<double>(m);
      inv[j] = 1.0 / std::sqrt(var[j] + eps);
      running_mean.data[j] = static_cast<float>((1.0 - momentum) * running_mean.data[j] +
                                                momentum * mean[j]);
      const double unbiased = var[j] * static_cast<double>(m) / static_cast<double>(m - 1);
      running_var.data[j] = static_cast<float>((1.0 - momentum) * running_var.data[j] +
                                               momentum * unbiased);
    }
  } else {
    for (int j = 0; j < c; ++j) {
      mean[j] = running_mean.data[j];
      inv[j] = 1.0 / std::sqrt(static_cast<double>(running_var.data[j]) + eps);
    }
  }

  Tensor y(vx.shape);
  for (int64_t r = 0; r < m; ++r) {
    const float* in = vx.ptr() + r * c;
    float* out = y.ptr() + r * c;
    for (int j = 0; j < c; ++j) {
      out[j] = static_cast<float>((in[j] - mean[j]) * inv[j] * vg.data[j] + vb.data[j]);
    }
  }

  return push(std::move(y), {x, gamma, beta},
              [x, gamma, beta, c, m, train, mean = std::move(mean),
               inv = std::move(inv)](Tape& t, const Tensor& g) {
                const Tensor& vx = t.val(x);
                const Tensor& vg = t.val(gamma);
                std::vector<double> gsum(c, 0.0), gxsum(c, 0.0);
                for (int64_t r = 0; r < m; ++r) {
                  const float* gr = g.ptr() + r * c;
                  const float* xr = vx.ptr() + r * c;
                  for (int j = 0; j < c; ++j) {
                    gsum[j] += gr[j];
                    gxsum[j] += gr[j] * (xr[j] - mean[j]) * inv[j];
                  }
                }
                if (t.wants(beta)) {
                  Tensor& db = t.gbuf(beta);
                  for (int j = 0; j < c; ++j) db.data[j] += static_cast<float>(gsum[j]);
                }
                if (t.wants(gamma)) {
                  Tensor& dg = t.gbuf(gamma);
                  for (int j = 0; j < c; ++j) dg.data[j] += static_cast<float>(gxsum[j]);
                }
                if (t.wants(x)) {
                  Tensor& dx = t.gbuf(x);
                  const double md = static_cast<double>(m);
                  for (int64_t r = 0; r < m; ++r) {
                    const float* gr = g.ptr() + r * c;
                    const float* xr = vx.ptr() + r * c;
                    float* dr = dx.ptr() + r * c;
                    for (int j = 0; j < c; ++j) {
                      const double scale = vg.data[j] * inv[j];
                      if (train) {
                        const double xhat = (xr[j] - mean[j]) * inv[j];
                        dr[j] += static_cast<float>(
                            scale * (gr[j] - gsum[j] / md - xhat * gxsum[j] / md));
                      } else {
                        dr[j] += static_cast<float>(scale * gr[j]);
                      }
                    }
                  }
                }
              });
}

NodeId Tape::dropout(NodeId x, float p, uint64_t key_base, bool train) {
  if (!train || p <= 0.0f) return x;
  if (p >= 1.0f) shape_error("dropout", "p must be < 1");
  const Tensor& vx = val(x);
  const int64_t inner = vx.row_size();
  const float keep_scale = 1.0f / (1.0f - p);
  Tensor y(vx.shape);
  const int64_t offset = sample_offset_;
  for (int64_t i = 0; i < y.numel(); ++i) {
    const int64_t sample = offset + i / inner;
    const bool keep = dropout_uniform(key_base, sample, i % inner) >= p;
    y.data[i] = keep ? vx.data[i] * keep_scale : 0.0f;
  }
  return push(std::move(y), {x},
              [x, p, key_base, inner, keep_scale, offset](Tape& t, const Tensor& g) {
                if (!t.wants(x)) return;
                Tensor& dx = t.gbuf(x);
                for (int64_t i = 0; i < g.numel(); ++i) {
                  const int64_t sample = offset + i / inner;
                  const bool keep = dropout_uniform(key_base, sample, i % inner) >= p;
                  if (keep) dx.data[i] += g.data[i] * keep_scale;
                }
              });
}

NodeId Tape::lstm_cell(NodeId x, NodeId h, NodeId c, NodeId w, NodeId bias) {
  const Tensor& vx = val(x);
  const Tensor& vh = val(h);
  const Tensor& vc = val(c);
  const Tensor& vw = val(w);
  const Tensor& vb = val(bias);
  if (vx.rank() != 2 || vh.rank() != 2 || vc.rank() != 2) shape_error("lstm_cell", vx, vh);
  const int batch = vx.shape[0];
  const int in = vx.shape[1];
  const int hidden = vh.shape[1];
  if (vh.shape[0] != batch || vc.shape != vh.shape || vw.rank() != 2 ||
      vw.shape[0] != in + hidden || vw.shape[1] != 4 * hidden ||
      vb.numel() != 4 * hidden) {
    shape_error("lstm_cell", vx, vw);
  }

  // gates = [x | h] * w + bias, without materialising the concat
  Tensor gates({batch, 4 * hidden});
  for (int b = 0; b < batch; ++b) {
    std::copy_n(vb.ptr(), 4 * hidden, gates.ptr() + static_cast<int64_t>(b) * 4 * hidden);
  }
  gemm_nn(batch, 4 * hidden, in, vx.ptr(), in, vw.ptr(), 4 * hidden, gates.ptr(), 4 * hidden);
  gemm_nn(batch, 4 * hidden, hidden, vh.ptr(), hidden,
          vw.ptr() + static_cast<int64_t>(in) * 4 * hidden, 4 * hidden, gates.ptr(),
          4 * hidden);

  Tensor out({batch, 2 * hidden});  // rows: [h' | c']
  Tensor tanhc({batch, hidden});
  for (int b = 0; b < batch; ++b) {
    float* z = gates.ptr() + static_cast<int64_t>(b) * 4 * hidden;
    const float* cprev = vc.ptr() + static_cast<int64_t>(b) * hidden;
    float* hrow = out.ptr() + static_cast<int64_t>(b) * 2 * hidden;
    float* crow = hrow + hidden;
    float* tc = tanhc.ptr() + static_cast<int64_t>(b) * hidden;
    for (int j = 0; j < hidden; ++j) {
      const double zi = z[j];
      const double zf = z[hidden + j];
      const double zg = z[2 * hidden + j];
      const double zo = z[3 * hidden + j];
      const double ig = 1.0 / (1.0 + std::exp(-zi));
      const double fg = 1.0 / (1.0 + std::exp(-zf));
      const double gg = std::tanh(zg);
      const double og = 1.0 / (1.0 + std::exp(-zo));
      const double cnew = fg * cprev[j] + ig * gg;
      const double tcv = std::tanh(cnew);
      // keep post-activation gates for backward
      z[j] = static_cast<float>(ig);
      z[hidden + j] = static_cast<float>(fg);
      z[2 * hidden + j] = static_cast<float>(gg);
      z[3 * hidden + j] = static_cast<float>(og);
      crow[j] = static_cast<float>(cnew);
      hrow[j] = static_cast<float>(og * tcv);
      tc[j] = static_cast<float>(tcv);
    }
  }

  return push(std::move(out), {x, h, c, w, bias},
              [x, h, c, w, bias, batch, in, hidden, gates = std::move(gates),
               tanhc = std::move(tanhc)](Tape& t, const Tensor& g) {
                const Tensor& vx = t.val(x);
                const Tensor& vh = t.val(h);
                const Tensor& vc = t.val(c);
                const Tensor& vw = t.val(w);

                Tensor dz({batch, 4 * hidden});
                Tensor dcprev({batch, hidden});
                for (int b = 0; b < batch; ++b) {
                  const float* gz = gates.ptr() + static_cast<int64_t>(b) * 4 * hidden;
                  const float* tc = tanhc.ptr() + static_cast<int64_t>(b) * hidden;
                  const float* gh = g.ptr() + static_cast<int64_t>(b) * 2 * hidden;
                  const float* gc = gh + hidden;
                  const float* cprev = vc.ptr() + static_cast<int64_t>(b) * hidden;
                  float* dzr = dz.ptr() + static_cast<int64_t>(b) * 4 * hidden;
                  float* dcp = dcprev.ptr() + static_cast<int64_t>(b) * hidden;
                  for (int j = 0; j < hidden; ++j) {
                    const double ig = gz[j];
                    const double fg = gz[hidden + j];
                    const double gg = gz[2 * hidden + j];
                    const double og = gz[3 * hidden + j];
                    const double tcv = tc[j];
                    const double dh = gh[j];
                    const double dc = gc[j] + dh * og * (1.0 - tcv * tcv);
                    dzr[j] = static_cast<float>(dc * gg * ig * (1.0 - ig));
                    dzr[hidden + j] = static_cast<float>(dc * cprev[j] * fg * (1.0 - fg));
                    dzr[2 * hidden + j] = static_cast<float>(dc * ig * (1.0 - gg * gg));
                    dzr[3 * hidden + j] = static_cast<float>(dh * tcv * og * (1.0 - og));
                    dcp[j] = static_cast<float>(dc * fg);
                  }
                }

                if (t.wants(x)) {
                  gemm_nt(batch, in, 4 * hidden, dz.ptr(), 4 * hidden, vw.ptr(), 4 * hidden,
                          t.gbuf(x).ptr(), in);
                }
                if (t.wants(h)) {
                  gemm_nt(batch, hidden, 4 * hidden, dz.ptr(), 4 * hidden,
                          vw.ptr() + static_cast<int64_t>(in) * 4 * hidden, 4 * hidden,
                          t.gbuf(h).ptr(), hidden);
                }
                if (t.wants(c)) {
                  Tensor& dc = t.gbuf(c);
                  for (int64_t i = 0; i < dc.numel(); ++i) dc.data[i] += dcprev.data[i];
                }
                if (t.wants(w)) {
                  Tensor& dw = t.gbuf(w);
                  gemm_tn(in, 4 * hidden, batch, vx.ptr(), in, dz.ptr(), 4 * hidden, dw.ptr(),
                          4 * hidden);
                  gemm_tn(hidden, 4 * hidden, batch, vh.ptr(), hidden, dz.ptr(), 4 * hidden,
                          dw.ptr() + static_cast<int64_t>(in) * 4 * hidden, 4 * hidden);
                }
                if (t.wants(bias)) {
                  Tensor& db = t.gbuf(bias);
                  for (int b = 0; b < batch; ++b) {
                    const float* row = dz.ptr() + static_cast<int64_t>(b) * 4 * hidden;
                    for (int j = 0; j < 4 * hidden; ++j) db.data[j] += row[j];
                  }
                }
              });
}

NodeId Tape::cross_entropy_probs(NodeId probs, const IntArray& targets) {
  const Tensor& vp = val(probs);
  const int v = vp.shape.back();
  const int64_t rows = vp.numel() / v;
  if (targets.numel() != rows) {
    shape_error("cross_entropy", "targets " + std::to_string(targets.numel()) +
                                     " vs rows " + std::to_string(rows));
  }
  double loss = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    const int32_t tgt = targets.data[static_cast<size_t>(r)];
    if (tgt < 0 || tgt >= v) shape_error("cross_entropy", "target out of range");
    const double p = std::max(static_cast<double>(vp.data[r * v + tgt]), kProbFloor);
    loss -= std::log(p);
  }
  loss /= static_cast<double>(rows);
  IntArray tgts = targets;
  const NodeId id = push(
      Tensor::scalar(static_cast<float>(loss)), {probs},
      [probs, tgts = std::move(tgts), v, rows](Tape& t, const Tensor& g) {
                if (!t.wants(probs)) return;
                const Tensor& vp = t.val(probs);
                Tensor& dp = t.gbuf(probs);
                const double gs = g.data[0] / static_cast<double>(rows);
        for (int64_t r = 0; r < rows; ++r) {
          const int32_t tgt = tgts.data[static_cast<size_t>(r)];
          const double p = std::max(static_cast<double>(vp.data[r * v + tgt]), kProbFloor);
          dp.data[r * v + tgt] -= static_cast<float>(gs / p);
        }
      });
  mark_scalar64(id, loss);
  return id;
}

}  // namespace schedsyn::tensor
