#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "getnext/core/matrix.hpp"
#include "getnext/core/rng.hpp"
#include "getnext/core/tensor.hpp"

namespace getnext::core {

// Named trainable tensors in registration order. Names are the checkpoint keys.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Matrix init);

  bool contains(const std::string& name) const { return index_.contains(name); }
  Tensor at(const std::string& name) const;

  const std::vector<Tensor>& all() const noexcept { return params_; }
  std::size_t count() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  // FNV-1a over names, shapes and value bytes.
  std::uint64_t checksum() const;

 private:
  std::vector<Tensor> params_;
  std::map<std::string, std::size_t> index_;
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
Matrix init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng);
// normal(0, 0.1)
Matrix init_embedding(std::size_t rows, std::size_t dim, Rng& rng);

}  // namespace getnext::core
