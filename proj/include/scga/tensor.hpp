#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scga/rng.hpp"

namespace scga {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

namespace detail {

// One node on the computation tape. Nodes hold their forward value, an
// optional gradient buffer (allocated on first backward touch), the parent
// handles needed to keep the graph alive, and a closure that pushes this
// node's gradient into its parents. Node ids come from a thread-local
// counter, so independent threads build independent tapes.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward touches it
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t size() const { return value.size(); }
  std::vector<double>& ensure_grad();
};

}  // namespace detail

// Value-semantics handle to a tape node. Copying a Tensor aliases the node;
// values are immutable after forward creation except through data() on
// leaves (optimizer updates, finite-difference probes) and the grad buffer.
class Tensor {
 public:
  Tensor() = default;

  // Leaf constructors. `leaf` participates in gradients; `constant` does not.
  static Tensor leaf(Shape shape, std::vector<double> data);
  static Tensor leaf_zeros(Shape shape);
  static Tensor constant(Shape shape, std::vector<double> data);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double v);  // [1x1] constant

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t ndim() const { return node_->shape.size(); }

  // 2-D accessors ([m x n]); 1-D tensors report rows()==1.
  std::size_t rows() const;
  std::size_t cols() const;
  double at(std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const;

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad() { return node_->ensure_grad(); }
  const std::vector<double>& grad_view() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  std::uint64_t node_id() const { return node_->id; }

  // Value copy cut off from the tape (no parents, no gradient).
  Tensor detach() const;

  double scalar_value() const;  // requires size()==1

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TensorNode> n);

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
// reachable node that requires them; repeated calls without zeroing grads
// accumulate further (the optimizer zeroes parameter grads after each step).
void backward(const Tensor& loss);

// ---- differentiable operations -------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);          // [m,k]x[k,n]
Tensor transpose(const Tensor& x);                        // 2-D
Tensor add(const Tensor& a, const Tensor& b);             // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);             // elementwise
Tensor add_rowvec(const Tensor& x, const Tensor& b);      // [m,n] + [n]
Tensor scale(const Tensor& x, double c);
Tensor scale_by(const Tensor& x, const Tensor& s);        // s is size-1
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor relu(const Tensor& x);
Tensor softmax(const Tensor& x, int axis);                // 2-D, axis 0 or 1
// Row-wise softmax restricted to mask!=0 entries; masked entries are exactly
// zero in the output and receive no gradient. Every row must have at least
// one unmasked entry.
Tensor masked_softmax(const Tensor& x, const std::vector<std::uint8_t>& mask);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);                     // x [m,n]; gain,bias [n]
Tensor concat(const std::vector<Tensor>& xs, int axis);   // 2-D
Tensor slice(const Tensor& x, int axis, std::size_t lo, std::size_t hi);
Tensor sum_all(const Tensor& x);                          // -> [1,1]
Tensor mean_all(const Tensor& x);                         // -> [1,1]
Tensor mean_axis0(const Tensor& x);                       // [m,n] -> [1,n]
Tensor pairwise_sum(const Tensor& u, const Tensor& v);    // [m,1],[n,1] -> [m,n]
Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids);
// Inverted dropout; identity when !training. Mask entries are drawn from rng
// in row-major order, one uniform per element.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training);
// Mean over slots of BCE(sigmoid(logit), target), computed in the stable
// max(x,0) - x*y + log1p(exp(-|x|)) form.
Tensor bce_with_logits_mean(const Tensor& logits, const std::vector<double>& targets);

// ---- non-differentiable helpers ------------------------------------------

std::size_t argmax(const std::vector<double>& v);  // lowest index wins ties
Tensor one_hot_row(std::size_t n, std::size_t index);  // [1,n] constant
double log_sigmoid(double x);

}  // namespace scga
