#pragma once

// Spectral GCN over the flow map and the transition attention map.

#include <cstddef>
#include <span>
#include <vector>

#include "getnext/core/params.hpp"
#include "getnext/core/sparse.hpp"
#include "getnext/core/tensor.hpp"

namespace getnext::graph {

struct GcnOptions {
  std::vector<std::size_t> hidden = {32, 64, 128};
  std::size_t out_dim = 128;
  double slope = 0.2;
  double dropout = 0.3;
};

struct GcnParams {
  std::vector<core::Tensor> weights;  // gcn_W0 .. gcn_W{hidden}
  std::vector<core::Tensor> biases;
  double slope = 0.2;
  double dropout = 0.3;

  GcnParams() = default;
  GcnParams(core::ParameterStore& store, std::size_t in_dim, const GcnOptions& options,
            core::Rng& rng);
};

// H0 = X; H_l = leaky_relu(L H_{l-1} W_l + b_l) for the hidden layers;
// dropout on the last hidden output when training; e_P = L H W_out + b_out.
core::Tensor gcn_forward(core::Tape& tape, const core::SparseMatrix& laplacian,
                         const core::Tensor& features, const GcnParams& params, core::Rng& rng,
                         bool train);

struct TransitionParams {
  core::Tensor w1, w2;  // C x h
  core::Tensor a1, a2;  // h x 1

  TransitionParams() = default;
  TransitionParams(core::ParameterStore& store, std::size_t in_dim, std::size_t hidden,
                   core::Rng& rng);
};

// Per-node scores Phi1 = X W1 a1 and Phi2 = X W2 a2, both N x 1.
struct TransitionParts {
  core::Tensor source;
  core::Tensor target;
};

TransitionParts transition_parts(core::Tape& tape, const core::Tensor& features,
                                 const TransitionParams& params);

// Phi[i][j] = (Phi1[i] + Phi2[j]) * (L[i][j] + 1), full N x N.
core::Tensor transition_attention(core::Tape& tape, const core::SparseMatrix& laplacian,
                                  const TransitionParts& parts);
// The same entries restricted to the listed rows (repeats allowed).
core::Tensor transition_rows(core::Tape& tape, const core::SparseMatrix& laplacian,
                             const TransitionParts& parts, std::span<const std::size_t> rows);

// Row `poi` of Phi. Throws InputError when out of range.
std::vector<double> row_lookup(const core::Matrix& phi, std::size_t poi);

}  // namespace getnext::graph
