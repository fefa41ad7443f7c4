#include "getnext/graph/gcn.hpp"

#include <cmath>
#include <iostream>

#include "getnext/core/error.hpp"

namespace getnext::graph {

using core::Matrix;
using core::Tape;
using core::Tensor;

GcnParams::GcnParams(core::ParameterStore& store, std::size_t in_dim, const GcnOptions& options,
                     core::Rng& rng)
    : slope(options.slope), dropout(options.dropout) {
  std::size_t prev = in_dim;
  std::vector<std::size_t> widths = options.hidden;
  widths.push_back(options.out_dim);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    weights.push_back(store.add("gcn_W" + std::to_string(l), core::init_weight(prev, widths[l], rng)));
    biases.push_back(store.add("gcn_b" + std::to_string(l), Matrix(1, widths[l])));
    prev = widths[l];
  }
}

namespace {
void warn_if_not_stochastic(const core::SparseMatrix& l) {
  const auto& ptr = l.row_ptr();
  const auto& val = l.values();
  for (std::size_t r = 0; r < l.rows(); ++r) {
    double s = 0.0;
    for (std::size_t e = ptr[r]; e < ptr[r + 1]; ++e) s += val[e];
    if (std::abs(s - 1.0) > 1e-9) {
      std::cerr << "warning: gcn operator row " << r << " sums to " << s << "\n";
      return;
    }
  }
}
}  // namespace

Tensor gcn_forward(Tape& tape, const core::SparseMatrix& laplacian, const Tensor& features,
                   const GcnParams& params, core::Rng& rng, bool train) {
  const std::size_t n = features.rows();
  if (laplacian.rows() != n || laplacian.cols() != n)
    throw ShapeError("gcn_forward: operator is " + std::to_string(laplacian.rows()) + "x" +
                     std::to_string(laplacian.cols()) + " but there are " + std::to_string(n) +
                     " nodes");
  if (params.weights.empty() || params.weights.front().rows() != features.cols())
    throw ShapeError("gcn_forward: feature width does not match the first layer");
  warn_if_not_stochastic(laplacian);
  Tensor h = features;
  const std::size_t last = params.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Tensor z = tape.add(tape.matmul(tape.spmm(laplacian, h), params.weights[l]), params.biases[l]);
    h = tape.leaky_relu(z, params.slope);
  }
  h = tape.dropout(h, params.dropout, rng, train);
  return tape.add(tape.matmul(tape.spmm(laplacian, h), params.weights[last]),
                  params.biases[last]);
}

TransitionParams::TransitionParams(core::ParameterStore& store, std::size_t in_dim,
                                   std::size_t hidden, core::Rng& rng) {
  w1 = store.add("tam_W1", core::init_weight(in_dim, hidden, rng));
  w2 = store.add("tam_W2", core::init_weight(in_dim, hidden, rng));
  a1 = store.add("tam_a1", core::init_weight(hidden, 1, rng));
  a2 = store.add("tam_a2", core::init_weight(hidden, 1, rng));
}

TransitionParts transition_parts(Tape& tape, const Tensor& features,
                                 const TransitionParams& params) {
  if (features.cols() != params.w1.rows())
    throw ShapeError("transition_parts: feature width does not match W1");
  return {tape.matmul(tape.matmul(features, params.w1), params.a1),
          tape.matmul(tape.matmul(features, params.w2), params.a2)};
}

namespace {

Tensor assemble(Tape& tape, const Tensor& source_rows, const TransitionParts& parts,
                Matrix shifted) {
  const std::size_t r = source_rows.rows();
  const std::size_t n = parts.target.rows();
  Tensor left = tape.matmul(source_rows, tape.constant(Matrix(1, n, 1.0)));
  Tensor right = tape.matmul(tape.constant(Matrix(r, 1, 1.0)), tape.transpose(parts.target));
  return tape.mul(tape.add(left, right), tape.constant(std::move(shifted)));
}

}  // namespace

Tensor transition_attention(Tape& tape, const core::SparseMatrix& laplacian,
                            const TransitionParts& parts) {
  const std::size_t n = parts.source.rows();
  if (laplacian.rows() != n || laplacian.cols() != n || parts.target.rows() != n)
    throw ShapeError("transition_attention: operator and node scores disagree in size");
  Matrix shifted = laplacian.to_dense();
  for (double& v : shifted.values()) v += 1.0;
  return assemble(tape, parts.source, parts, std::move(shifted));
}

Tensor transition_rows(Tape& tape, const core::SparseMatrix& laplacian,
                       const TransitionParts& parts, std::span<const std::size_t> rows) {
  const std::size_t n = parts.source.rows();
  if (laplacian.rows() != n || laplacian.cols() != n || parts.target.rows() != n)
    throw ShapeError("transition_rows: operator and node scores disagree in size");
  for (std::size_t r : rows)
    if (r >= n) throw InputError("transition_rows: row " + std::to_string(r) + " out of range");
  Matrix shifted = laplacian.rows_dense(std::vector<std::size_t>(rows.begin(), rows.end()));
  for (double& v : shifted.values()) v += 1.0;
  return assemble(tape, tape.gather_rows(parts.source, rows), parts, std::move(shifted));
}

std::vector<double> row_lookup(const Matrix& phi, std::size_t poi) {
  if (poi >= phi.rows())
    throw InputError("row_lookup: POI index " + std::to_string(poi) + " out of range for " +
                     std::to_string(phi.rows()) + " rows");
  const auto r = phi.row(poi);
  return {r.begin(), r.end()};
}

}  // namespace getnext::graph
