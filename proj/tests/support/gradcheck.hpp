#pragma once

// Central finite-difference oracle. Independent of the tape: it only ever
// evaluates the forward function and perturbs raw parameter values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "getnext/core/tensor.hpp"

namespace getnext::testing {

struct GradCheckResult {
  double worst_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_entry = 0;
  std::size_t entries_checked = 0;
};

// Relative error with a floor: entries whose magnitude is below `floor` are
// compared on an absolute scale of floor * tolerance, below the roundoff
// noise of a central difference on an O(1) loss.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return diff / scale;
}

// `loss` must build a fresh tape and return the scalar loss value computed
// from the current parameter values. `analytic` holds the gradients produced
// by the implementation under test, aligned with `params`.
inline GradCheckResult finite_difference_check(
    std::vector<core::Tensor> params, const std::vector<core::Matrix>& analytic,
    const std::function<double()>& loss, double eps = 1e-6) {
  GradCheckResult res;
  for (std::size_t p = 0; p < params.size(); ++p) {
    core::Matrix& v = params[p].mutable_value();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v.data()[i];
      v.data()[i] = orig + eps;
      const double up = loss();
      v.data()[i] = orig - eps;
      const double down = loss();
      v.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[p].data()[i], numeric);
      ++res.entries_checked;
      if (err > res.worst_rel_error) {
        res.worst_rel_error = err;
        res.worst_param = params[p].name();
        res.worst_entry = i;
      }
    }
  }
  return res;
}

}  // namespace getnext::testing
