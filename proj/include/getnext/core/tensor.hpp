#pragma once

// Reverse-mode differentiation over dense 2-D matrices.
//
// A Tensor is a shared handle to a node holding a value and, when it requires
// a gradient, a same-shaped accumulator. Parameters are leaf tensors created
// with make_parameter and live across many tapes. A Tape records every
// primitive executed through it; Tape::backward walks the record in exact
// reverse order, applying each primitive's vector-Jacobian product.
//
// A tape and the tensors it produces belong to one thread.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "getnext/core/matrix.hpp"
#include "getnext/core/rng.hpp"
#include "getnext/core/sparse.hpp"

namespace getnext::core {

namespace detail {
struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::function<void(Node&)> backward;
  std::string name;

  Matrix& grad_buffer();
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const;
  // Zero-filled matrix of the right shape when nothing has been accumulated.
  Matrix grad() const;
  Matrix& mutable_value();
  void zero_grad();

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::string& name() const;
  double item() const;

  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend class Tape;
  friend Tensor make_parameter(Matrix init, std::string name);
  friend Tensor make_constant(Matrix value);
};

// Trainable leaf. Its gradient accumulates across tapes until zero_grad().
Tensor make_parameter(Matrix init, std::string name = {});
// Leaf that never receives a gradient.
Tensor make_constant(Matrix value);

// Row-by-column boolean pattern; a zero entry removes that key from the row.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;

  static Mask causal(std::size_t n);
  static Mask all(std::size_t rows, std::size_t cols);
  bool operator()(std::size_t r, std::size_t c) const { return allowed[r * cols + c] != 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Tensor constant(Matrix value);
  // Leaf that requires a gradient but is owned by this tape (used to probe
  // derivatives with respect to inputs).
  Tensor variable(Matrix value, std::string name = {});

  Tensor matmul(const Tensor& a, const Tensor& b);
  // Constant sparse operator times a tensor.
  Tensor spmm(const SparseMatrix& s, const Tensor& b);
  // b may match a's shape or be a 1 x cols row broadcast across a's rows.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double s);
  Tensor add_scalar(const Tensor& a, double s);
  Tensor concat_cols(std::span<const Tensor> parts);
  Tensor concat_cols(std::initializer_list<Tensor> parts);
  Tensor concat_rows(std::span<const Tensor> parts);
  Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
  Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
  // Row i of the result is row index[i] of a. Gradient scatters back.
  Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
  Tensor transpose(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double slope);
  Tensor relu(const Tensor& a);
  Tensor sin(const Tensor& a);
  // Row-wise softmax. Masked positions get probability exactly 0; a fully
  // masked row yields all zeros.
  Tensor softmax_rows(const Tensor& a, const Mask* mask = nullptr);
  // Per-row standardization, no affine part.
  Tensor layer_norm_rows(const Tensor& a, double eps = 1e-10);
  // Inverted dropout; identity when !train or rate == 0.
  Tensor dropout(const Tensor& a, double rate, Rng& rng, bool train);
  // Mean over rows of -log softmax(logits)[row, target[row]].
  Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets);
  // Mean squared difference over all entries.
  Tensor mse(const Tensor& prediction, const Tensor& target);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded VJP in reverse.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  Tensor record(Matrix value, std::vector<Tensor> inputs,
                std::function<void(detail::Node&)> vjp);

  std::vector<std::shared_ptr<detail::Node>> nodes_;
  bool backward_done_ = false;
};

}  // namespace getnext::core
