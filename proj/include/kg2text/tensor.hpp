// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// Tensors are shared handles to immutable-after-construction value nodes;
// gradients accumulate additively on the node during a backward pass.
// A Tape records operations in execution order (topological by construction)
// and replays them in reverse. Tapes are thread-confined: constructing a
// Tape makes it the active tape for the current thread until destruction,
// so independent tapes may run in parallel threads.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kg2text {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until gradient first flows into it
  bool requires_grad = false;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor from(std::vector<int> shape, std::vector<double> data);
  static Tensor scalar(double value);
  /// Uniform(-range, range) init, marked as a learnable parameter.
  static Tensor uniform_param(std::vector<int> shape, double range,
                              std::mt19937_64& rng);
  /// Xavier-scaled uniform init for projection matrices (rows x cols).
  static Tensor xavier_param(int rows, int cols, std::mt19937_64& rng);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  /// Row/col view: rank-1 [n] counts as 1 x n.
  int rows() const;
  int cols() const;
  size_t size() const { return node_->data.size(); }

  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }
  double value() const;               // scalar tensors only
  double at(size_t flat_index) const { return node_->data[flat_index]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  /// Gradient buffer, allocated to zeros on first access.
  std::vector<double>& grad();
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  void zero_grad();

  std::string shape_str() const;
  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

/// Ordered record of recorded operations. Constructing a Tape activates it
/// for the current thread; destruction restores the previously active tape.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_step);
  /// Seeds d(loss)/d(loss) = 1 and replays recorded steps in reverse.
  /// The loss must be a scalar recorded on this tape.
  void backward(const Tensor& loss);
  size_t size() const { return steps_.size(); }

  static Tape* active();

 private:
  std::vector<std::function<void()>> steps_;
  Tape* prev_ = nullptr;
};

// ---- elementwise / structural ops ------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Same-shape add, or row-broadcast when b is a vector of width a.cols().
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same shape
/// s is a scalar tensor; multiplies every element of t.
Tensor scalar_mul(const Tensor& s, const Tensor& t);
/// k * t + c, with constant k and c.
Tensor affine(const Tensor& t, double k, double c);
Tensor neg(const Tensor& t);
Tensor div(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor sum(const Tensor& t);                   // scalar
Tensor pick(const Tensor& t, size_t flat_index);            // scalar
Tensor pick_sum(const Tensor& t, const std::vector<size_t>& flat_indices);
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& t, int start, int len);
Tensor slice_rows(const Tensor& t, int start, int len);
Tensor row(const Tensor& t, int r);

// ---- nonlinearities ---------------------------------------------------------

Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
/// slope is a 1-element learnable tensor.
Tensor prelu(const Tensor& t, const Tensor& slope);
Tensor log(const Tensor& t);
Tensor clamp_min(const Tensor& t, double floor);
Tensor sqrt(const Tensor& t);

/// Inverted dropout: zero each element with probability `rate` and scale
/// survivors by 1/(1-rate) during training; identity otherwise.
Tensor dropout(const Tensor& t, double rate, bool training,
               std::mt19937_64& rng);

// ---- softmax / normalization ------------------------------------------------

/// Softmax over unmasked entries of a vector; masked entries are exactly 0.
/// An all-false mask yields the all-zero vector.
Tensor masked_softmax(const Tensor& logits, const std::vector<uint8_t>& mask);
/// Row-wise masked softmax on a matrix; mask is row-major rows x cols.
Tensor masked_softmax_rows(const Tensor& logits,
                           const std::vector<uint8_t>& mask);
Tensor softmax(const Tensor& logits);

/// gain (x - mean) / sqrt(var + 1e-5) + bias, per row for matrices.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

}  // namespace kg2text
