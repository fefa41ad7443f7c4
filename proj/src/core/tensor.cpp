#include "getnext/core/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "getnext/core/error.hpp"
#include "getnext/simd/kernels.hpp"

namespace getnext::core {

namespace detail {
Matrix& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Matrix(value.rows(), value.cols());
  return grad;
}
}  // namespace detail

namespace {

using NodePtr = std::shared_ptr<detail::Node>;

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() +
                   " and " + b.shape_string());
}

void add_into(Matrix& dst, const Matrix& src) {
  simd::active().axpy(1.0, src.data(), dst.data(), src.size());
}

bool is_row_broadcast(const Matrix& a, const Matrix& b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

#ifndef NDEBUG
void check_finite(const char* op, const Matrix& m) {
  for (double v : m.values()) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite output");
  }
}
#else
void check_finite(const char*, const Matrix&) {}
#endif

}  // namespace

const Matrix& Tensor::value() const {
  if (!node_) throw std::logic_error("Tensor: undefined handle");
  return node_->value;
}

Matrix Tensor::grad() const {
  const Matrix& v = value();
  if (node_->grad.empty()) return Matrix(v.rows(), v.cols());
  return node_->grad;
}

Matrix& Tensor::mutable_value() {
  if (!node_) throw std::logic_error("Tensor: undefined handle");
  return node_->value;
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) node_->grad.fill(0.0);
}

const std::string& Tensor::name() const {
  if (!node_) throw std::logic_error("Tensor: undefined handle");
  return node_->name;
}

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("item: tensor is " + v.shape_string());
  return v.data()[0];
}

Tensor make_parameter(Matrix init, std::string name) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(init);
  node->requires_grad = true;
  node->name = std::move(name);
  node->grad = Matrix(node->value.rows(), node->value.cols());
  return Tensor(std::move(node));
}

Tensor make_constant(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Mask Mask::causal(std::size_t n) {
  Mask m{n, n, std::vector<std::uint8_t>(n * n, 0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.allowed[i * n + j] = 1;
  return m;
}

Mask Mask::all(std::size_t rows, std::size_t cols) {
  return Mask{rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
}

Tensor Tape::record(Matrix value, std::vector<Tensor> inputs,
                    std::function<void(detail::Node&)> vjp) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                    [](const Tensor& t) { return t.requires_grad(); });
  if (node->requires_grad) node->backward = std::move(vjp);
  nodes_.push_back(node);
  return Tensor(std::move(node));
}

Tensor Tape::constant(Matrix value) { return make_constant(std::move(value)); }

Tensor Tape::variable(Matrix value, std::string name) {
  return make_parameter(std::move(value), std::move(name));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
  Matrix out(av.rows(), bv.cols());
  gemm_accumulate(av, false, bv, false, out);
  check_finite("matmul", out);
  NodePtr an = a.node_, bn = b.node_;
  return record(std::move(out), {a, b}, [an, bn](detail::Node& o) {
    if (an->requires_grad) gemm_accumulate(o.grad, false, bn->value, true, an->grad_buffer());
    if (bn->requires_grad) gemm_accumulate(an->value, true, o.grad, false, bn->grad_buffer());
  });
}

Tensor Tape::spmm(const SparseMatrix& s, const Tensor& b) {
  Matrix out = s.multiply(b.value());
  NodePtr bn = b.node_;
  const SparseMatrix* sp = &s;
  return record(std::move(out), {b}, [bn, sp](detail::Node& o) {
    if (bn->requires_grad) add_into(bn->grad_buffer(), sp->transpose_multiply(o.grad));
  });
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool bcast = is_row_broadcast(av, bv);
  if (!av.same_shape(bv) && !bcast) shape_fail("add", av, bv);
  Matrix out = av;
  if (bcast) {
    for (std::size_t r = 0; r < out.rows(); ++r)
      simd::active().axpy(1.0, bv.data(), out.data() + r * out.cols(), out.cols());
  } else {
    add_into(out, bv);
  }
  check_finite("add", out);
  NodePtr an = a.node_, bn = b.node_;
  return record(std::move(out), {a, b}, [an, bn, bcast](detail::Node& o) {
    if (an->requires_grad) add_into(an->grad_buffer(), o.grad);
    if (bn->requires_grad) {
      Matrix& g = bn->grad_buffer();
      if (bcast) {
        for (std::size_t r = 0; r < o.grad.rows(); ++r)
          simd::active().axpy(1.0, o.grad.data() + r * o.grad.cols(), g.data(), g.cols());
      } else {
        add_into(g, o.grad);
      }
    }
  });
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool bcast = is_row_broadcast(av, bv);
  if (!av.same_shape(bv) && !bcast) shape_fail("mul", av, bv);
  Matrix out(av.rows(), av.cols());
  const std::size_t c = av.cols();
  for (std::size_t i = 0; i < av.size(); ++i) {
    out.data()[i] = av.data()[i] * (bcast ? bv.data()[i % c] : bv.data()[i]);
  }
  check_finite("mul", out);
  NodePtr an = a.node_, bn = b.node_;
  return record(std::move(out), {a, b}, [an, bn, bcast, c](detail::Node& o) {
    const Matrix& g = o.grad;
    if (an->requires_grad) {
      Matrix& ga = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.data()[i] += g.data()[i] * (bcast ? bn->value.data()[i % c] : bn->value.data()[i]);
    }
    if (bn->requires_grad) {
      Matrix& gb = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        gb.data()[bcast ? i % c : i] += g.data()[i] * an->value.data()[i];
    }
  });
}

Tensor Tape::scale(const Tensor& a, double s) {
  Matrix out = a.value();
  for (double& v : out.values()) v *= s;
  NodePtr an = a.node_;
  return record(std::move(out), {a}, [an, s](detail::Node& o) {
    simd::active().axpy(s, o.grad.data(), an->grad_buffer().data(), o.grad.size());
  });
}

Tensor Tape::add_scalar(const Tensor& a, double s) {
  Matrix out = a.value();
  for (double& v : out.values()) v += s;
  NodePtr an = a.node_;
  return record(std::move(out), {a},
                [an](detail::Node& o) { add_into(an->grad_buffer(), o.grad); });
}

Tensor Tape::concat_cols(std::initializer_list<Tensor> parts) {
  return concat_cols(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    total += p.cols();
  }
  Matrix out(rows, total);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + off);
    off += v.cols();
  }
  std::vector<NodePtr> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node_);
  return record(std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                [nodes, offsets](detail::Node& o) {
                  for (std::size_t k = 0; k < nodes.size(); ++k) {
                    if (!nodes[k]->requires_grad) continue;
                    Matrix& g = nodes[k]->grad_buffer();
                    for (std::size_t r = 0; r < g.rows(); ++r)
                      for (std::size_t c = 0; c < g.cols(); ++c)
                        g(r, c) += o.grad(r, offsets[k] + c);
                  }
                });
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    total += p.rows();
  }
  std::vector<double> vals;
  vals.reserve(total * cols);
  for (const Tensor& p : parts)
    vals.insert(vals.end(), p.value().values().begin(), p.value().values().end());
  std::vector<NodePtr> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node_);
  return record(Matrix(total, cols, std::move(vals)),
                std::vector<Tensor>(parts.begin(), parts.end()), [nodes](detail::Node& o) {
                  std::size_t off = 0;
                  for (const auto& n : nodes) {
                    const std::size_t len = n->value.size();
                    if (n->requires_grad)
                      simd::active().axpy(1.0, o.grad.data() + off, n->grad_buffer().data(),
                                          len);
                    off += len;
                  }
                });
}

Tensor Tape::slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  const Matrix& av = a.value();
  if (begin > end || end > av.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside " + av.shape_string());
  }
  const std::size_t c = av.cols();
  Matrix out(end - begin, c,
             std::vector<double>(av.data() + begin * c, av.data() + end * c));
  NodePtr an = a.node_;
  return record(std::move(out), {a}, [an, begin, c](detail::Node& o) {
    simd::active().axpy(1.0, o.grad.data(), an->grad_buffer().data() + begin * c,
                        o.grad.size());
  });
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  const Matrix& av = a.value();
  if (begin > end || end > av.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside " + av.shape_string());
  }
  Matrix out(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
  NodePtr an = a.node_;
  return record(std::move(out), {a}, [an, begin](detail::Node& o) {
    Matrix& g = an->grad_buffer();
    for (std::size_t r = 0; r < o.grad.rows(); ++r)
      for (std::size_t c = 0; c < o.grad.cols(); ++c) g(r, begin + c) += o.grad(r, c);
  });
}

Tensor Tape::gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  const Matrix& av = a.value();
  const std::size_t c = av.cols();
  Matrix out(index.size(), c);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " outside " +
                       av.shape_string());
    }
    std::copy(av.row(index[i]).begin(), av.row(index[i]).end(), out.row(i).begin());
  }
  NodePtr an = a.node_;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return record(std::move(out), {a}, [an, idx, c](detail::Node& o) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      simd::active().axpy(1.0, o.grad.data() + i * c, g.data() + idx[i] * c, c);
  });
}

Tensor Tape::transpose(const Tensor& a) {
  NodePtr an = a.node_;
  return record(core::transpose(a.value()), {a}, [an](detail::Node& o) {
    add_into(an->grad_buffer(), core::transpose(o.grad));
  });
}

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
  Matrix out = a.value();
  for (double& v : out.values())
    if (v < 0.0) v *= slope;
  NodePtr an = a.node_;
  return record(std::move(out), {a}, [an, slope](detail::Node& o) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] += o.grad.data()[i] * (an->value.data()[i] < 0.0 ? slope : 1.0);
  });
}

Tensor Tape::relu(const Tensor& a) { return leaky_relu(a, 0.0); }

Tensor Tape::sin(const Tensor& a) {
  Matrix out = a.value();
  for (double& v : out.values()) v = std::sin(v);
  NodePtr an = a.node_;
  return record(std::move(out), {a}, [an](detail::Node& o) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] += o.grad.data()[i] * std::cos(an->value.data()[i]);
  });
}

Tensor Tape::softmax_rows(const Tensor& a, const Mask* mask) {
  const Matrix& av = a.value();
  if (mask && (mask->rows != av.rows() || mask->cols != av.cols())) {
    throw ShapeError("softmax_rows: mask " + std::to_string(mask->rows) + "x" +
                     std::to_string(mask->cols) + " does not cover " + av.shape_string());
  }
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < av.cols(); ++c)
      if (!mask || (*mask)(r, c)) top = std::max(top, av(r, c));
    if (top == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) {
      if (mask && !(*mask)(r, c)) continue;
      out(r, c) = std::exp(av(r, c) - top);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) /= z;
  }
  check_finite("softmax_rows", out);
  NodePtr an = a.node_;
  auto self = std::make_shared<Matrix>(out);
  return record(std::move(out), {a}, [an, self](detail::Node& o) {
    const Matrix& y = *self;
    Matrix& g = an->grad_buffer();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dotp = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dotp += o.grad(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) g(r, c) += y(r, c) * (o.grad(r, c) - dotp);
    }
  });
}

Tensor Tape::layer_norm_rows(const Tensor& a, double eps) {
  const Matrix& av = a.value();
  const std::size_t n = av.cols();
  Matrix out(av.rows(), n);
  std::vector<double> inv_std(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double mu = 0.0;
    for (double v : av.row(r)) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : av.row(r)) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) out(r, c) = (av(r, c) - mu) * inv_std[r];
  }
  check_finite("layer_norm_rows", out);
  NodePtr an = a.node_;
  auto y = std::make_shared<Matrix>(out);
  return record(std::move(out), {a}, [an, y, inv_std, n](detail::Node& o) {
    Matrix& g = an->grad_buffer();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < y->rows(); ++r) {
      double mean_g = 0.0, mean_gy = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        mean_g += o.grad(r, c);
        mean_gy += o.grad(r, c) * (*y)(r, c);
      }
      mean_g *= inv_n;
      mean_gy *= inv_n;
      for (std::size_t c = 0; c < n; ++c)
        g(r, c) += inv_std[r] * (o.grad(r, c) - mean_g - (*y)(r, c) * mean_gy);
    }
  });
}

Tensor Tape::dropout(const Tensor& a, double rate, Rng& rng, bool train) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (double& m : mask.values()) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
  NodePtr an = a.node_;
  return record(std::move(out), {a}, [an, mask = std::move(mask)](detail::Node& o) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += o.grad.data()[i] * mask.data()[i];
  });
}

Tensor Tape::cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets) {
  const Matrix& lv = logits.value();
  if (targets.size() != lv.rows() || lv.rows() == 0) {
    throw ShapeError("cross_entropy_rows: " + std::to_string(targets.size()) +
                     " targets for logits " + lv.shape_string());
  }
  Matrix probs(lv.rows(), lv.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    if (targets[r] >= lv.cols()) {
      throw ShapeError("cross_entropy_rows: target " + std::to_string(targets[r]) +
                       " outside " + std::to_string(lv.cols()) + " classes");
    }
    const double top = *std::max_element(lv.row(r).begin(), lv.row(r).end());
    double z = 0.0;
    for (std::size_t c = 0; c < lv.cols(); ++c) {
      probs(r, c) = std::exp(lv(r, c) - top);
      z += probs(r, c);
    }
    for (std::size_t c = 0; c < lv.cols(); ++c) probs(r, c) /= z;
    total += std::log(z) + top - lv(r, targets[r]);
  }
  const double inv_rows = 1.0 / static_cast<double>(lv.rows());
  Matrix out(1, 1, total * inv_rows);
  check_finite("cross_entropy_rows", out);
  NodePtr ln = logits.node_;
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return record(std::move(out), {logits},
                [ln, probs = std::move(probs), tgt, inv_rows](detail::Node& o) {
                  const double g0 = o.grad.data()[0] * inv_rows;
                  Matrix& g = ln->grad_buffer();
                  for (std::size_t r = 0; r < probs.rows(); ++r) {
                    for (std::size_t c = 0; c < probs.cols(); ++c) g(r, c) += g0 * probs(r, c);
                    g(r, tgt[r]) -= g0;
                  }
                });
}

Tensor Tape::mse(const Tensor& prediction, const Tensor& target) {
  const Matrix& pv = prediction.value();
  const Matrix& tv = target.value();
  if (!pv.same_shape(tv) || pv.empty()) shape_fail("mse", pv, tv);
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv.data()[i] - tv.data()[i];
    total += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(pv.size());
  NodePtr pn = prediction.node_, tn = target.node_;
  return record(Matrix(1, 1, total * inv_n), {prediction, target},
                [pn, tn, inv_n](detail::Node& o) {
                  const double g0 = o.grad.data()[0] * 2.0 * inv_n;
                  for (std::size_t i = 0; i < pn->value.size(); ++i) {
                    const double d = pn->value.data()[i] - tn->value.data()[i];
                    if (pn->requires_grad) pn->grad_buffer().data()[i] += g0 * d;
                    if (tn->requires_grad) tn->grad_buffer().data()[i] -= g0 * d;
                  }
                });
}

Tensor Tape::sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  NodePtr an = a.node_;
  return record(Matrix(1, 1, total), {a}, [an](detail::Node& o) {
    const double g0 = o.grad.data()[0];
    for (double& g : an->grad_buffer().values()) g += g0;
  });
}

Tensor Tape::mean(const Tensor& a) {
  if (a.value().empty()) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " +
                     (loss.defined() ? loss.value().shape_string() : std::string("undefined")));
  }
  if (backward_done_) throw std::logic_error("backward: tape already consumed");
  if (!loss.requires_grad()) return;
  loss.node_->grad_buffer().data()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    detail::Node& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n);
  }
  backward_done_ = true;
}

}  // namespace getnext::core
