#include "getnext/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace getnext::core {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Lemire-style rejection on the low product keeps the draw unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = next();
    const unsigned __int128 prod = static_cast<unsigned __int128>(x) * n;
    if (static_cast<std::uint64_t>(prod) >= threshold) {
      return static_cast<std::uint64_t>(prod >> 64);
    }
  }
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + stddev * r * std::cos(theta);
}

}  // namespace getnext::core
