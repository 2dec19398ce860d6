#pragma once

// Dense 64-bit tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle to an immutable value buffer. Leaves created
// with Tensor::parameter() carry requires_grad and are the only tensors whose
// values may be edited in place (optimizer updates). Ops take a Tape and
// record a backward rule whenever at least one input requires a gradient;
// otherwise the result is an untracked constant.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eraselab::numerics {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

namespace detail {
struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a backward pass touches the node
  bool requires_grad = false;
  bool leaf = true;
  const Tape* producer = nullptr;
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);

  bool defined() const noexcept { return data_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> values() const;
  double operator[](std::size_t i) const { return values()[i]; }
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;

  // Leaves only: in-place edits by optimizers and gradient checks.
  std::span<double> mutable_values();

  // Untracked copy of the current values.
  Tensor detach() const;

  bool same_as(const Tensor& other) const noexcept { return data_ == other.data_; }

  // Internal: used by ops and the tape.
  detail::TensorData& data() const;
  static Tensor wrap(std::shared_ptr<detail::TensorData> data);

 private:
  std::shared_ptr<detail::TensorData> data_;
};

// Records differentiable ops for one forward pass. Confined to one thread.
class Tape {
 public:
  using BackwardRule = std::function<void(const detail::TensorData& out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Builds the op result and, if any input tracks gradients, records it.
  Tensor record(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                BackwardRule rule);

  // Reverse pass from a scalar produced on this tape. Every requires_grad
  // input reachable through recorded nodes has its grad overwritten with
  // d(loss)/d(input); shared sub-expressions accumulate.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() noexcept { nodes_.clear(); }

 private:
  struct Node {
    std::shared_ptr<detail::TensorData> output;
    std::vector<Tensor> inputs;
    BackwardRule rule;
  };
  std::vector<Node> nodes_;
};

// Adds `g` into the gradient buffer of `t` if it tracks gradients.
void accumulate_grad(const Tensor& t, std::span<const double> g);

// --- primitive ops --------------------------------------------------------

// [m x k] * [k x n] -> [m x n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// Same shape, or b of shape [n] broadcast across the rows of a [m x n].
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
// Elementwise product of equal shapes.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor silu(Tape& tape, const Tensor& a);
// Softmax over the last axis (rank 1 or 2).
Tensor softmax(Tape& tape, const Tensor& a);
// Mean over rows of the squared row-difference norm: sum((a-b)^2) / rows.
// Rank-1 inputs count as a single row.
Tensor mse(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sum(Tape& tape, const Tensor& a);
// Column-wise concatenation of rank-2 tensors with equal row counts.
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
// [d] -> [rows x d]
Tensor repeat_rows(Tape& tape, const Tensor& v, std::size_t rows);
// weights [k], table [k x d] -> sum_i weights[i] * table[i, :]   ([d])
Tensor weighted_sum(Tape& tape, const Tensor& weights, const Tensor& table);

// softmax((logits + noise) / temperature); smooth in logits, no
// straight-through estimator.
Tensor gumbel_softmax(Tape& tape, const Tensor& logits, double temperature,
                      std::span<const double> gumbel_noise);

// Plain-vector variant used when no gradient is needed.
std::vector<double> gumbel_softmax(std::span<const double> logits, double temperature,
                                   std::span<const double> gumbel_noise);

}  // namespace eraselab::numerics
