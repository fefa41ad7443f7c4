#pragma once

// Context embeddings: trainable user/category tables, time2vec, and the
// fusion layers that assemble one check-in vector.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "getnext/core/params.hpp"
#include "getnext/core/tensor.hpp"
#include "getnext/data/dataset.hpp"

namespace getnext::model {

// Time of day as a 30-minute slot index over 48, in [0, 1).
double slot_time(const data::CheckIn& q);
// Seconds since local midnight over 86400, in [0, 1).
double day_fraction(const data::CheckIn& q);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(core::ParameterStore& store, const std::string& name, std::size_t n_items,
                 std::size_t dim, core::Rng& rng);

  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t dim() const noexcept { return dim_; }
  const core::Tensor& weights() const noexcept { return weights_; }

  // One row per index. Only looked-up rows receive gradient.
  core::Tensor lookup(core::Tape& tape, std::span<const std::size_t> index) const;

 private:
  std::size_t n_items_ = 0;
  std::size_t dim_ = 0;
  core::Tensor weights_;
};

struct Time2Vec {
  core::Tensor omega;  // 1 x (k + 1)
  core::Tensor phi;    // 1 x (k + 1)

  Time2Vec() = default;
  Time2Vec(core::ParameterStore& store, std::size_t dim, core::Rng& rng);
  std::size_t dim() const { return omega.cols(); }
};

// t is a column of times in [0, 1). Row r is
// [w0 t_r + p0, sin(w1 t_r + p1), ..., sin(wk t_r + pk)].
core::Tensor time2vec(core::Tape& tape, std::span<const double> t, const Time2Vec& params);
// Plain evaluation for a single time.
std::vector<double> time2vec(double t, std::span<const double> omega, std::span<const double> phi);

struct FusionLayer {
  core::Tensor weight;  // 2n x 2n
  core::Tensor bias;    // 1 x 2n

  FusionLayer() = default;
  FusionLayer(core::ParameterStore& store, const std::string& prefix, std::size_t width,
              core::Rng& rng);
  std::size_t width() const { return weight.rows(); }
};

// leaky_relu([a; b] W + bias, 0.2), row by row.
core::Tensor fuse(core::Tape& tape, const core::Tensor& a, const core::Tensor& b,
                  const FusionLayer& layer);

struct ContextOptions {
  std::size_t poi_dim = 128;  // also the user embedding width
  std::size_t time_dim = 32;  // also the category embedding width
  bool use_fusion = true;
  bool use_time_category = true;
};

// Owns every context parameter. Parameters of disabled parts are not created.
class ContextEmbedder {
 public:
  ContextEmbedder() = default;
  ContextEmbedder(core::ParameterStore& store, const ContextOptions& options,
                  std::size_t n_users, std::size_t n_categories, core::Rng& rng);

  const ContextOptions& options() const noexcept { return options_; }
  std::size_t output_dim() const noexcept { return 2 * (options_.poi_dim + options_.time_dim); }

  // Rows of e_q = [fuse(e_p, e_u); fuse(e_t, e_c)] for a sequence of
  // check-ins by one user. poi_rows is k x poi_dim.
  core::Tensor embed(core::Tape& tape, const core::Tensor& poi_rows, std::size_t user,
                     std::span<const std::size_t> categories,
                     std::span<const double> times) const;

  const EmbeddingTable& users() const noexcept { return users_; }
  const EmbeddingTable& categories() const noexcept { return categories_; }
  const Time2Vec& time_encoding() const noexcept { return t2v_; }

 private:
  ContextOptions options_;
  EmbeddingTable users_;
  EmbeddingTable categories_;
  Time2Vec t2v_;
  FusionLayer fuse_pu_;
  FusionLayer fuse_ct_;
};

}  // namespace getnext::model
