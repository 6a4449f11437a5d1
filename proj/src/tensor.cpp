#include "scga/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "scga/errors.hpp"

namespace scga {

namespace {

thread_local std::uint64_t g_next_node_id = 1;

std::shared_ptr<detail::TensorNode> make_node(Shape shape, std::vector<double> value) {
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->id = g_next_node_id++;
  return n;
}

void check_2d(const Tensor& t, const char* what) {
  if (t.ndim() > 2) {
    throw std::invalid_argument(std::string(what) + ": expected at most 2-D, got shape " +
                                shape_str(t.shape()));
  }
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                              " vs " + shape_str(b.shape()));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::vector<double>& detail::TensorNode::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data) {
  if (shape_size(shape) != data.size()) {
    throw std::invalid_argument("Tensor::leaf: shape " + shape_str(shape) + " needs " +
                                std::to_string(shape_size(shape)) + " values, got " +
                                std::to_string(data.size()));
  }
  auto n = make_node(std::move(shape), std::move(data));
  n->requires_grad = true;
  return wrap(n);
}

Tensor Tensor::leaf_zeros(Shape shape) {
  auto n = make_node(shape, std::vector<double>(shape_size(shape), 0.0));
  n->requires_grad = true;
  return wrap(std::move(n));
}

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  if (shape_size(shape) != data.size()) {
    throw std::invalid_argument("Tensor::constant: shape/data size mismatch");
  }
  return wrap(make_node(std::move(shape), std::move(data)));
}

Tensor Tensor::zeros(Shape shape) {
  auto n = make_node(shape, std::vector<double>(shape_size(shape), 0.0));
  return wrap(std::move(n));
}

Tensor Tensor::scalar(double v) { return constant({1, 1}, {v}); }

std::size_t Tensor::rows() const { return node_->shape.size() == 2 ? node_->shape[0] : 1; }

std::size_t Tensor::cols() const {
  return node_->shape.size() == 2 ? node_->shape[1]
                                  : (node_->shape.empty() ? 1 : node_->shape[0]);
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return wrap(make_node(node_->shape, node_->value));
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw std::invalid_argument("scalar_value: tensor has shape " + shape_str(shape()));
  }
  return node_->value[0];
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorNode> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar tensor" +
                                (loss.defined() ? ", got shape " + shape_str(loss.shape())
                                                : std::string(", got empty tensor")));
  }
  using Node = detail::TensorNode;

  // Iterative post-order DFS over grad-requiring nodes; each node is visited
  // exactly once even when reachable along several paths.
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  struct Frame {
    Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  Node* root = loss.node().get();
  if (!root->requires_grad) return;  // loss detached from every parameter
  stack.push_back({root, 0});
  seen.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  // Each sweep starts fresh on op nodes; leaves keep accumulating across
  // calls until explicitly zeroed (the documented accumulate contract).
  for (Node* n : order) {
    if (n->backward_fn && !n->grad.empty()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  }
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// op helpers
// ---------------------------------------------------------------------------

namespace {

using detail::TensorNode;

// Builds the result node wiring: parents recorded for graph liveness,
// requires_grad propagated, backward closure attached only when needed.
Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward_fn) {
  auto n = make_node(std::move(shape), std::move(value));
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (needs) {
    n->requires_grad = true;
    n->parents.reserve(inputs.size());
    for (const auto& in : inputs) n->parents.push_back(in.node());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor::wrap(std::move(n));
}

std::vector<double>* grad_of(TensorNode& out, std::size_t parent_index) {
  TensorNode* p = out.parents[parent_index].get();
  if (!p->requires_grad) return nullptr;
  return &p->ensure_grad();
}

}  // namespace

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) shape_error("matmul", a, b);
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  auto bw = [m, k, n](TensorNode& o) {
    const auto& g = o.grad;
    const auto& av = o.parents[0]->value;
    const auto& bv = o.parents[1]->value;
    if (auto* ga = grad_of(o, 0)) {
      // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          (*ga)[i * k + p] += acc;
        }
    }
    if (auto* gb = grad_of(o, 1)) {
      // dB = A^T * dC
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i) acc += av[i * k + p] * g[i * n + j];
          (*gb)[p * n + j] += acc;
        }
    }
  };
  return make_op({m, n}, std::move(out), {a, b}, bw);
}

Tensor transpose(const Tensor& x) {
  check_2d(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.data()[i * n + j];
  auto bw = [m, n](TensorNode& o) {
    if (auto* gx = grad_of(o, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += o.grad[j * m + i];
    }
  };
  return make_op({n, m}, std::move(out), {x}, bw);
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto bw = [](TensorNode& o) {
    for (int p = 0; p < 2; ++p)
      if (auto* g = grad_of(o, p))
        for (std::size_t i = 0; i < o.grad.size(); ++i) (*g)[i] += o.grad[i];
  };
  return make_op(a.shape(), std::move(out), {a, b}, bw);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto bw = [](TensorNode& o) {
    if (auto* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*ga)[i] += o.grad[i];
    if (auto* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*gb)[i] -= o.grad[i];
  };
  return make_op(a.shape(), std::move(out), {a, b}, bw);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto bw = [](TensorNode& o) {
    const auto& av = o.parents[0]->value;
    const auto& bv = o.parents[1]->value;
    if (auto* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*ga)[i] += o.grad[i] * bv[i];
    if (auto* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*gb)[i] += o.grad[i] * av[i];
  };
  return make_op(a.shape(), std::move(out), {a, b}, bw);
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  check_2d(x, "add_rowvec");
  const std::size_t m = x.rows(), n = x.cols();
  if (b.size() != n) shape_error("add_rowvec", x, b);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.data()[i * n + j] + b.data()[j];
  auto bw = [m, n](TensorNode& o) {
    if (auto* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*gx)[i] += o.grad[i];
    if (auto* gb = grad_of(o, 1)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += o.grad[i * n + j];
    }
  };
  return make_op(x.shape(), std::move(out), {x, b}, bw);
}

Tensor scale(const Tensor& x, double c) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x.data()[i];
  auto bw = [c](TensorNode& o) {
    if (auto* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*gx)[i] += c * o.grad[i];
  };
  return make_op(x.shape(), std::move(out), {x}, bw);
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) {
    throw std::invalid_argument("scale_by: scale must be size 1, got " + shape_str(s.shape()));
  }
  const double c = s.data()[0];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x.data()[i];
  auto bw = [c](TensorNode& o) {
    const auto& xv = o.parents[0]->value;
    if (auto* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) (*gx)[i] += c * o.grad[i];
    if (auto* gs = grad_of(o, 1)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < o.grad.size(); ++i) acc += o.grad[i] * xv[i];
      (*gs)[0] += acc;
    }
  };
  return make_op(x.shape(), std::move(out), {x, s}, bw);
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    out[i] = v >= 0.0 ? v : slope * v;
  }
  auto bw = [slope](TensorNode& o) {
    const auto& xv = o.parents[0]->value;
    if (auto* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        (*gx)[i] += o.grad[i] * (xv[i] >= 0.0 ? 1.0 : slope);
  };
  return make_op(x.shape(), std::move(out), {x}, bw);
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

namespace {

// Shared forward/backward for softmax over contiguous or strided slices.
// `count` slices, each of `len` entries at `stride` apart starting at
// slice * slice_stride.
struct SliceSpec {
  std::size_t count, len, stride, slice_stride;
};

SliceSpec slices_for_axis(const Tensor& x, int axis) {
  const std::size_t m = x.rows(), n = x.cols();
  if (axis == 1) return {m, n, 1, n};         // along each row
  if (axis == 0) return {n, m, n, 1};         // along each column
  throw std::invalid_argument("softmax: axis must be 0 or 1");
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
  check_2d(x, "softmax");
  const SliceSpec sp = slices_for_axis(x, axis);
  std::vector<double> out(x.size());
  const auto& xv = x.data();
  for (std::size_t s = 0; s < sp.count; ++s) {
    const std::size_t base = s * sp.slice_stride;
    double mx = xv[base];
    for (std::size_t i = 1; i < sp.len; ++i) mx = std::max(mx, xv[base + i * sp.stride]);
    double z = 0.0;
    for (std::size_t i = 0; i < sp.len; ++i) {
      const double e = std::exp(xv[base + i * sp.stride] - mx);
      out[base + i * sp.stride] = e;
      z += e;
    }
    for (std::size_t i = 0; i < sp.len; ++i) out[base + i * sp.stride] /= z;
  }
  auto bw = [sp](TensorNode& o) {
    if (auto* gx = grad_of(o, 0)) {
      const auto& y = o.value;
      for (std::size_t s = 0; s < sp.count; ++s) {
        const std::size_t base = s * sp.slice_stride;
        double dot = 0.0;
        for (std::size_t i = 0; i < sp.len; ++i) {
          const std::size_t k = base + i * sp.stride;
          dot += o.grad[k] * y[k];
        }
        for (std::size_t i = 0; i < sp.len; ++i) {
          const std::size_t k = base + i * sp.stride;
          (*gx)[k] += y[k] * (o.grad[k] - dot);
        }
      }
    }
  };
  return make_op(x.shape(), std::move(out), {x}, bw);
}

Tensor masked_softmax(const Tensor& x, const std::vector<std::uint8_t>& mask) {
  check_2d(x, "masked_softmax");
  const std::size_t m = x.rows(), n = x.cols();
  if (mask.size() != m * n) {
    throw std::invalid_argument("masked_softmax: mask size " + std::to_string(mask.size()) +
                                " does not match tensor " + shape_str(x.shape()));
  }
  std::vector<double> out(x.size(), 0.0);
  const auto& xv = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -1e300;
    bool any = false;
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) {
        mx = std::max(mx, xv[i * n + j]);
        any = true;
      }
    if (!any) {
      throw std::invalid_argument("masked_softmax: row " + std::to_string(i) +
                                  " has an empty neighborhood");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) {
        const double e = std::exp(xv[i * n + j] - mx);
        out[i * n + j] = e;
        z += e;
      }
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) out[i * n + j] /= z;
  }
  auto bw = [m, n, mask](TensorNode& o) {
    if (auto* gx = grad_of(o, 0)) {
      const auto& y = o.value;
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          if (mask[i * n + j]) dot += o.grad[i * n + j] * y[i * n + j];
        for (std::size_t j = 0; j < n; ++j)
          if (mask[i * n + j])
            (*gx)[i * n + j] += y[i * n + j] * (o.grad[i * n + j] - dot);
      }
    }
  };
  return make_op(x.shape(), std::move(out), {x}, bw);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  check_2d(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw std::invalid_argument("layer_norm: gain/bias must have " + std::to_string(n) +
                                " entries");
  }
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(m);
  const auto& xv = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xv[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xv[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xv[i * n + j] - mean) * is;
      xhat[i * n + j] = h;
      out[i * n + j] = h * gain.data()[j] + bias.data()[j];
    }
  }
  auto bw = [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode& o) {
    const auto& gainv = o.parents[1]->value;
    auto* gx = grad_of(o, 0);
    auto* gg = grad_of(o, 1);
    auto* gb = grad_of(o, 2);
    for (std::size_t i = 0; i < m; ++i) {
      double sum_dh = 0.0, sum_dh_xhat = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        const double dh = o.grad[k] * gainv[j];
        sum_dh += dh;
        sum_dh_xhat += dh * xhat[k];
        if (gg) (*gg)[j] += o.grad[k] * xhat[k];
        if (gb) (*gb)[j] += o.grad[k];
      }
      if (gx) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t k = i * n + j;
          const double dh = o.grad[k] * gainv[j];
          (*gx)[k] += inv_std[i] * (dh - inv_n * sum_dh - inv_n * xhat[k] * sum_dh_xhat);
        }
      }
    }
  };
  return make_op(x.shape(), std::move(out), {x, gain, bias}, bw);
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  for (const auto& x : xs) check_2d(x, "concat");
  const std::size_t keep = axis == 0 ? xs[0].cols() : xs[0].rows();
  std::size_t total = 0;
  for (const auto& x : xs) {
    const std::size_t k = axis == 0 ? x.cols() : x.rows();
    if (k != keep) {
      throw std::invalid_argument("concat: non-concatenated extents disagree: " +
                                  shape_str(xs[0].shape()) + " vs " + shape_str(x.shape()));
    }
    total += axis == 0 ? x.rows() : x.cols();
  }
  const std::size_t m = axis == 0 ? total : keep;
  const std::size_t n = axis == 0 ? keep : total;
  std::vector<double> out(m * n);
  std::vector<std::size_t> offsets(xs.size());
  std::size_t off = 0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    offsets[t] = off;
    const std::size_t xm = xs[t].rows(), xn = xs[t].cols();
    for (std::size_t i = 0; i < xm; ++i)
      for (std::size_t j = 0; j < xn; ++j) {
        if (axis == 0)
          out[(off + i) * n + j] = xs[t].data()[i * xn + j];
        else
          out[i * n + (off + j)] = xs[t].data()[i * xn + j];
      }
    off += axis == 0 ? xm : xn;
  }
  std::vector<std::pair<std::size_t, std::size_t>> dims;  // (rows, cols) per input
  for (const auto& x : xs) dims.emplace_back(x.rows(), x.cols());
  auto bw = [axis, n, offsets, dims](TensorNode& o) {
    for (std::size_t t = 0; t < dims.size(); ++t) {
      auto* g = grad_of(o, t);
      if (!g) continue;
      const auto [xm, xn] = dims[t];
      for (std::size_t i = 0; i < xm; ++i)
        for (std::size_t j = 0; j < xn; ++j) {
          const std::size_t k = axis == 0 ? (offsets[t] + i) * n + j : i * n + (offsets[t] + j);
          (*g)[i * xn + j] += o.grad[k];
        }
    }
  };
  std::vector<Tensor> inputs = xs;
  return make_op({m, n}, std::move(out), std::move(inputs), bw);
}

Tensor slice(const Tensor& x, int axis, std::size_t lo, std::size_t hi) {
  check_2d(x, "slice");
  if (axis != 0 && axis != 1) throw std::invalid_argument("slice: axis must be 0 or 1");
  const std::size_t m = x.rows(), n = x.cols();
  const std::size_t extent = axis == 0 ? m : n;
  if (lo >= hi || hi > extent) {
    throw std::invalid_argument("slice: range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + ") out of bounds for axis extent " +
                                std::to_string(extent));
  }
  const std::size_t om = axis == 0 ? hi - lo : m;
  const std::size_t on = axis == 0 ? n : hi - lo;
  std::vector<double> out(om * on);
  for (std::size_t i = 0; i < om; ++i)
    for (std::size_t j = 0; j < on; ++j) {
      const std::size_t si = axis == 0 ? lo + i : i;
      const std::size_t sj = axis == 0 ? j : lo + j;
      out[i * on + j] = x.data()[si * n + sj];
    }
  auto bw = [axis, lo, n, om, on](TensorNode& o) {
    if (auto* gx = grad_of(o, 0)) {
      for (std::size_t i = 0; i < om; ++i)
        for (std::size_t j = 0; j < on; ++j) {
          const std::size_t si = axis == 0 ? lo + i : i;
          const std::size_t sj = axis == 0 ? j : lo + j;
          (*gx)[si * n + sj] += o.grad[i * on + j];
        }
    }
  };
  return make_op({om, on}, std::move(out), {x}, bw);
}

Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  auto bw = [](TensorNode& o) {
    if (auto* gx = grad_of(o, 0))
      for (auto& g : *gx) g += o.grad[0];
  };
  return make_op({1, 1}, {acc}, {x}, bw);
}

Tensor mean_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  auto bw = [inv](TensorNode& o) {
    if (auto* gx = grad_of(o, 0))
      for (auto& g : *gx) g += o.grad[0] * inv;
  };
  return make_op({1, 1}, {acc * inv}, {x}, bw);
}

Tensor mean_axis0(const Tensor& x) {
  check_2d(x, "mean_axis0");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x.data()[i * n + j];
  const double inv = 1.0 / static_cast<double>(m);
  for (auto& v : out) v *= inv;
  auto bw = [m, n, inv](TensorNode& o) {
    if (auto* gx = grad_of(o, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += o.grad[j] * inv;
    }
  };
  return make_op({1, n}, std::move(out), {x}, bw);
}

Tensor pairwise_sum(const Tensor& u, const Tensor& v) {
  if (u.cols() != 1 || v.cols() != 1) {
    throw std::invalid_argument("pairwise_sum: expects column vectors, got " +
                                shape_str(u.shape()) + " and " + shape_str(v.shape()));
  }
  const std::size_t m = u.rows(), n = v.rows();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = u.data()[i] + v.data()[j];
  auto bw = [m, n](TensorNode& o) {
    if (auto* gu = grad_of(o, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += o.grad[i * n + j];
        (*gu)[i] += acc;
      }
    }
    if (auto* gv = grad_of(o, 1)) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += o.grad[i * n + j];
        (*gv)[j] += acc;
      }
    }
  };
  return make_op({m, n}, std::move(out), {u, v}, bw);
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  check_2d(table, "embedding_rows");
  if (ids.empty()) throw std::invalid_argument("embedding_rows: empty index list");
  const std::size_t vocab = table.rows(), d = table.cols();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::invalid_argument("embedding_rows: index " + std::to_string(id) +
                                  " out of range for table with " + std::to_string(vocab) +
                                  " rows");
    }
  }
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      out[i * d + j] = table.data()[static_cast<std::size_t>(ids[i]) * d + j];
  auto bw = [ids, d](TensorNode& o) {
    if (auto* gt = grad_of(o, 0)) {
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
          (*gt)[static_cast<std::size_t>(ids[i]) * d + j] += o.grad[i * d + j];
    }
  };
  return make_op({ids.size(), d}, std::move(out), {table}, bw);
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep = 1.0 - rate;
  const double inv_keep = 1.0 / keep;
  std::vector<std::uint8_t> mask(x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.uniform() < keep ? 1 : 0;
    out[i] = mask[i] ? x.data()[i] * inv_keep : 0.0;
  }
  auto bw = [mask = std::move(mask), inv_keep](TensorNode& o) {
    if (auto* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        if (mask[i]) (*gx)[i] += o.grad[i] * inv_keep;
  };
  return make_op(x.shape(), std::move(out), {x}, bw);
}

Tensor bce_with_logits_mean(const Tensor& logits, const std::vector<double>& targets) {
  if (logits.size() != targets.size()) {
    throw std::invalid_argument("bce_with_logits_mean: " + std::to_string(logits.size()) +
                                " logits vs " + std::to_string(targets.size()) + " targets");
  }
  const std::size_t n = logits.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = logits.data()[i];
    const double y = targets[i];
    acc += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  const double inv = 1.0 / static_cast<double>(n);
  auto bw = [targets, inv](TensorNode& o) {
    if (auto* gx = grad_of(o, 0)) {
      const auto& xv = o.parents[0]->value;
      for (std::size_t i = 0; i < xv.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-xv[i]));
        (*gx)[i] += o.grad[0] * (s - targets[i]) * inv;
      }
    }
  };
  return make_op({1, 1}, {acc * inv}, {logits}, bw);
}

// ---------------------------------------------------------------------------
// non-differentiable helpers
// ---------------------------------------------------------------------------

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Tensor one_hot_row(std::size_t n, std::size_t index) {
  std::vector<double> v(n, 0.0);
  v.at(index) = 1.0;
  return Tensor::constant({1, n}, std::move(v));
}

double log_sigmoid(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

}  // namespace scga
