#include "getnext/core/adam.hpp"

#include <cmath>

#include "getnext/core/error.hpp"

namespace getnext::core {
namespace {

void update(Matrix& p, const Matrix& g, Matrix& m, Matrix& v, const AdamOptions& o,
            double bias1, double bias2) {
  if (!p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v)) {
    throw ShapeError("adam_step: parameter " + p.shape_string() + " vs gradient " +
                     g.shape_string());
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double grad = g.data()[i] + o.weight_decay * p.data()[i];
    double& mi = m.data()[i];
    double& vi = v.data()[i];
    mi = o.beta1 * mi + (1.0 - o.beta1) * grad;
    vi = o.beta2 * vi + (1.0 - o.beta2) * grad * grad;
    const double mhat = mi / bias1;
    const double vhat = vi / bias2;
    p.data()[i] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
  }
}

}  // namespace

AdamState make_adam_state(std::span<const Tensor> params, AdamOptions options) {
  AdamState s;
  s.options = options;
  for (const Tensor& p : params) {
    s.first_moment.emplace_back(p.rows(), p.cols());
    s.second_moment.emplace_back(p.rows(), p.cols());
  }
  return s;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but state for " +
                     std::to_string(state.first_moment.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.options.beta1, t);
  const double bias2 = 1.0 - std::pow(state.options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix g = params[i].grad();
    update(params[i].mutable_value(), g, state.first_moment[i], state.second_moment[i],
           state.options, bias1, bias2);
  }
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state) {
  if (state.first_moment.empty()) {
    state.first_moment.emplace_back(param.rows(), param.cols());
    state.second_moment.emplace_back(param.rows(), param.cols());
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  update(param, grad, state.first_moment[0], state.second_moment[0], state.options,
         1.0 - std::pow(state.options.beta1, t), 1.0 - std::pow(state.options.beta2, t));
}

}  // namespace getnext::core
