#include "getnext/model/embeddings.hpp"

#include <cmath>
#include <stdexcept>

#include "getnext/core/error.hpp"

namespace getnext::model {

using core::Matrix;
using core::Tape;
using core::Tensor;

double slot_time(const data::CheckIn& q) {
  return static_cast<double>(data::seconds_of_day(q) / 1800) / 48.0;
}

double day_fraction(const data::CheckIn& q) {
  return static_cast<double>(data::seconds_of_day(q)) / 86400.0;
}

EmbeddingTable::EmbeddingTable(core::ParameterStore& store, const std::string& name,
                               std::size_t n_items, std::size_t dim, core::Rng& rng)
    : n_items_(n_items), dim_(dim) {
  if (n_items == 0 || dim == 0) throw ShapeError("embedding table " + name + " is empty");
  weights_ = store.add(name, core::init_embedding(n_items, dim, rng));
}

Tensor EmbeddingTable::lookup(Tape& tape, std::span<const std::size_t> index) const {
  for (std::size_t i : index)
    if (i >= n_items_)
      throw InputError("embedding index " + std::to_string(i) + " out of range for " +
                       weights_.name() + " with " + std::to_string(n_items_) + " rows");
  return tape.gather_rows(weights_, index);
}

Time2Vec::Time2Vec(core::ParameterStore& store, std::size_t dim, core::Rng& rng) {
  if (dim < 2) throw ShapeError("time2vec needs at least one periodic component");
  Matrix w(1, dim), p(1, dim);
  // Frequencies spread over a few cycles per day keep the sin terms distinct.
  for (std::size_t i = 0; i < dim; ++i) {
    w(0, i) = rng.uniform(0.0, 2.0 * M_PI * 4.0);
    p(0, i) = rng.uniform(-M_PI, M_PI);
  }
  omega = store.add("t2v_omega", std::move(w));
  phi = store.add("t2v_phi", std::move(p));
}

namespace {
void check_time(double t) {
  if (!(t >= 0.0 && t < 1.0))
    throw InputError("time2vec input " + std::to_string(t) + " outside [0, 1)");
}
}  // namespace

Tensor time2vec(Tape& tape, std::span<const double> t, const Time2Vec& params) {
  for (double v : t) check_time(v);
  const std::size_t dim = params.dim();
  Tensor col = tape.constant(Matrix::column_vector(t));
  Tensor lin = tape.add(tape.matmul(col, params.omega), params.phi);
  return tape.concat_cols({tape.slice_cols(lin, 0, 1), tape.sin(tape.slice_cols(lin, 1, dim))});
}

std::vector<double> time2vec(double t, std::span<const double> omega,
                             std::span<const double> phi) {
  check_time(t);
  if (omega.size() != phi.size() || omega.empty())
    throw ShapeError("time2vec omega/phi length mismatch");
  std::vector<double> out(omega.size());
  out[0] = omega[0] * t + phi[0];
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::sin(omega[i] * t + phi[i]);
  return out;
}

FusionLayer::FusionLayer(core::ParameterStore& store, const std::string& prefix,
                         std::size_t width, core::Rng& rng) {
  weight = store.add(prefix + "_W", core::init_weight(width, width, rng));
  bias = store.add(prefix + "_b", Matrix(1, width));
}

Tensor fuse(Tape& tape, const Tensor& a, const Tensor& b, const FusionLayer& layer) {
  if (a.rows() != b.rows() || a.cols() + b.cols() != layer.width())
    throw ShapeError("fuse: inputs " + a.value().shape_string() + " and " +
                     b.value().shape_string() + " do not fit a layer of width " +
                     std::to_string(layer.width()));
  Tensor x = tape.concat_cols({a, b});
  return tape.leaky_relu(tape.add(tape.matmul(x, layer.weight), layer.bias), 0.2);
}

ContextEmbedder::ContextEmbedder(core::ParameterStore& store, const ContextOptions& options,
                                 std::size_t n_users, std::size_t n_categories, core::Rng& rng)
    : options_(options) {
  users_ = EmbeddingTable(store, "user_emb", n_users, options.poi_dim, rng);
  if (options.use_fusion) fuse_pu_ = FusionLayer(store, "fuse_pu", 2 * options.poi_dim, rng);
  if (options.use_time_category) {
    categories_ = EmbeddingTable(store, "cat_emb", n_categories, options.time_dim, rng);
    t2v_ = Time2Vec(store, options.time_dim, rng);
    if (options.use_fusion) fuse_ct_ = FusionLayer(store, "fuse_ct", 2 * options.time_dim, rng);
  }
}

Tensor ContextEmbedder::embed(Tape& tape, const Tensor& poi_rows, std::size_t user,
                              std::span<const std::size_t> categories,
                              std::span<const double> times) const {
  const std::size_t k = poi_rows.rows();
  if (poi_rows.cols() != options_.poi_dim || categories.size() != k || times.size() != k)
    throw ShapeError("checkin embedding: sequence parts disagree in length or width");
  const std::vector<std::size_t> user_rows(k, user);
  Tensor e_u = users_.lookup(tape, user_rows);
  Tensor e_pu = options_.use_fusion ? fuse(tape, poi_rows, e_u, fuse_pu_)
                                    : tape.concat_cols({poi_rows, e_u});
  Tensor e_ct;
  if (options_.use_time_category) {
    Tensor e_t = time2vec(tape, times, t2v_);
    Tensor e_c = categories_.lookup(tape, categories);
    e_ct = options_.use_fusion ? fuse(tape, e_t, e_c, fuse_ct_) : tape.concat_cols({e_t, e_c});
  } else {
    e_ct = tape.constant(Matrix(k, 2 * options_.time_dim));
  }
  return tape.concat_cols({e_pu, e_ct});
}

}  // namespace getnext::model
