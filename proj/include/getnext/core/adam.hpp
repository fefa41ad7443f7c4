#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "getnext/core/matrix.hpp"
#include "getnext/core/tensor.hpp"

namespace getnext::core {

struct AdamOptions {
  double lr = 1e-3;
  double weight_decay = 0.0;  // added to the gradient as weight_decay * param
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

AdamState make_adam_state(std::span<const Tensor> params, AdamOptions options);

// One Adam update of every parameter from its accumulated gradient.
void adam_step(std::span<Tensor> params, AdamState& state);

// Same update for a bare matrix; `state` holds a single moment pair.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state);

}  // namespace getnext::core
