#include "getnext/core/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace getnext::core {

Tensor ParameterStore::add(const std::string& name, Matrix init) {
  if (index_.contains(name)) throw std::logic_error("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(make_parameter(std::move(init), name));
  return params_.back();
}

Tensor ParameterStore::at(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return params_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.value().size();
  return n;
}

void ParameterStore::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const Tensor& p : params_) {
    mix(p.name().data(), p.name().size());
    const std::uint64_t shape[2] = {p.rows(), p.cols()};
    mix(shape, sizeof(shape));
    mix(p.value().data(), p.value().size() * sizeof(double));
  }
  return h;
}

Matrix init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Matrix w(fan_in, fan_out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  return w;
}

Matrix init_embedding(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix e(rows, dim);
  for (double& v : e.values()) v = rng.normal(0.0, 0.1);
  return e;
}

}  // namespace getnext::core
