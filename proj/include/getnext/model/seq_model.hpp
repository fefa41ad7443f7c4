#pragma once

// Transformer encoder over check-in embeddings, the three prediction heads,
// the final score adjustment and the composite loss.

#include <cstddef>
#include <span>
#include <vector>

#include "getnext/core/params.hpp"
#include "getnext/core/tensor.hpp"

namespace getnext::model {

struct EncoderOptions {
  std::size_t dim = 320;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t ff_dim = 1024;
  double dropout = 0.3;
  std::size_t max_len = 512;
  bool causal_mask = true;
  bool scaled_attention = false;  // divide scores by sqrt(head width)
};

// k x d sinusoidal table.
core::Matrix positional_encoding(std::size_t k, std::size_t d);

struct EncoderLayer {
  std::vector<core::Tensor> wq, wk, wv;  // one d x d/h block per head
  core::Tensor wo, bo;
  core::Tensor w1, b1, w2, b2;
  core::Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(core::ParameterStore& store, const EncoderOptions& options, core::Rng& rng);

  const EncoderOptions& options() const noexcept { return options_; }

  // k x d -> k x d. When `attention` is given, each layer's per-head
  // attention matrices are appended to it.
  core::Tensor encode(core::Tape& tape, const core::Tensor& x, core::Rng& rng, bool train,
                      std::vector<core::Tensor>* attention = nullptr) const;

 private:
  EncoderOptions options_;
  std::vector<EncoderLayer> layers_;
};

// Row i is the mean of input rows 0..i. Stands in for the encoder in the
// mean-pooling ablation.
core::Tensor causal_running_mean(core::Tape& tape, const core::Tensor& x);

struct HeadParams {
  core::Tensor poi_w, poi_b, time_w, time_b, cat_w, cat_b;

  HeadParams() = default;
  HeadParams(core::ParameterStore& store, std::size_t dim, std::size_t n_pois,
             std::size_t n_categories, core::Rng& rng);
};

struct HeadOutputs {
  core::Tensor poi;   // k x N
  core::Tensor time;  // k x 1
  core::Tensor cat;   // k x Gamma
};

HeadOutputs heads(core::Tape& tape, const core::Tensor& enc, const HeadParams& params);

// Indices of the top_k largest last_row + phi_row scores, ties by ascending
// index. top_k is clamped to N. An empty phi_row means no adjustment.
std::vector<std::size_t> recommend(std::span<const double> last_row,
                                   std::span<const double> phi_row, std::size_t top_k);

struct Targets {
  std::vector<std::size_t> poi;
  std::vector<double> time;  // day fraction of the next check-in
  std::vector<std::size_t> cat;
};

struct LossOptions {
  double time_weight = 10.0;
  bool time_and_category = true;  // false drops both auxiliary terms
};

// CE(poi + phi_rows) + w * MSE(time) + CE(cat), each averaged over
// positions. phi_rows may be undefined.
core::Tensor loss(core::Tape& tape, const HeadOutputs& out, const core::Tensor& phi_rows,
                  const Targets& targets, const LossOptions& options = {});

}  // namespace getnext::model
