#include "getnext/model/seq_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "getnext/core/error.hpp"

namespace getnext::model {

using core::Matrix;
using core::Tape;
using core::Tensor;

Matrix positional_encoding(std::size_t k, std::size_t d) {
  Matrix pe(k, d);
  for (std::size_t pos = 0; pos < k; ++pos)
    for (std::size_t i = 0; i < d; ++i) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(i - i % 2) / static_cast<double>(d));
      pe(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

Encoder::Encoder(core::ParameterStore& store, const EncoderOptions& options, core::Rng& rng)
    : options_(options) {
  const std::size_t d = options.dim;
  if (options.heads == 0 || d % options.heads != 0)
    throw ShapeError("encoder width " + std::to_string(d) + " is not divisible by " +
                     std::to_string(options.heads) + " heads");
  const std::size_t dh = d / options.heads;
  for (std::size_t l = 0; l < options.layers; ++l) {
    const std::string p = "enc" + std::to_string(l) + "_";
    EncoderLayer layer;
    for (std::size_t h = 0; h < options.heads; ++h) {
      const std::string s = std::to_string(h);
      layer.wq.push_back(store.add(p + "Wq" + s, core::init_weight(d, dh, rng)));
      layer.wk.push_back(store.add(p + "Wk" + s, core::init_weight(d, dh, rng)));
      layer.wv.push_back(store.add(p + "Wv" + s, core::init_weight(d, dh, rng)));
    }
    layer.wo = store.add(p + "Wo", core::init_weight(d, d, rng));
    layer.bo = store.add(p + "bo", Matrix(1, d));
    layer.w1 = store.add(p + "W1", core::init_weight(d, options.ff_dim, rng));
    layer.b1 = store.add(p + "b1", Matrix(1, options.ff_dim));
    layer.w2 = store.add(p + "W2", core::init_weight(options.ff_dim, d, rng));
    layer.b2 = store.add(p + "b2", Matrix(1, d));
    layer.ln1_gain = store.add(p + "ln1_gain", Matrix(1, d, 1.0));
    layer.ln1_bias = store.add(p + "ln1_bias", Matrix(1, d));
    layer.ln2_gain = store.add(p + "ln2_gain", Matrix(1, d, 1.0));
    layer.ln2_bias = store.add(p + "ln2_bias", Matrix(1, d));
    layers_.push_back(std::move(layer));
  }
}

Tensor Encoder::encode(Tape& tape, const Tensor& x, core::Rng& rng, bool train,
                       std::vector<Tensor>* attention) const {
  const std::size_t k = x.rows();
  if (x.cols() != options_.dim)
    throw ShapeError("encode: input width " + std::to_string(x.cols()) + ", expected " +
                     std::to_string(options_.dim));
  if (k == 0 || k > options_.max_len)
    throw InputError("encode: sequence length " + std::to_string(k) + " outside [1, " +
                     std::to_string(options_.max_len) + "]");
  const core::Mask mask = options_.causal_mask ? core::Mask::causal(k) : core::Mask::all(k, k);
  const double score_scale =
      options_.scaled_attention
          ? 1.0 / std::sqrt(static_cast<double>(options_.dim / options_.heads))
          : 1.0;

  Tensor h = tape.add(x, tape.constant(positional_encoding(k, options_.dim)));
  for (const EncoderLayer& layer : layers_) {
    std::vector<Tensor> heads_out;
    for (std::size_t i = 0; i < layer.wq.size(); ++i) {
      Tensor q = tape.matmul(h, layer.wq[i]);
      Tensor kk = tape.matmul(h, layer.wk[i]);
      Tensor v = tape.matmul(h, layer.wv[i]);
      Tensor scores = tape.matmul(q, tape.transpose(kk));
      if (score_scale != 1.0) scores = tape.scale(scores, score_scale);
      Tensor a = tape.softmax_rows(scores, &mask);
      if (attention) attention->push_back(a);
      heads_out.push_back(tape.matmul(a, v));
    }
    Tensor s = tape.add(tape.matmul(tape.concat_cols(heads_out), layer.wo), layer.bo);
    s = tape.dropout(s, options_.dropout, rng, train);
    h = tape.add(tape.mul(tape.layer_norm_rows(tape.add(h, s)), layer.ln1_gain), layer.ln1_bias);

    Tensor f = tape.relu(tape.add(tape.matmul(h, layer.w1), layer.b1));
    f = tape.add(tape.matmul(f, layer.w2), layer.b2);
    f = tape.dropout(f, options_.dropout, rng, train);
    h = tape.add(tape.mul(tape.layer_norm_rows(tape.add(h, f)), layer.ln2_gain), layer.ln2_bias);
  }
  return h;
}

Tensor causal_running_mean(Tape& tape, const Tensor& x) {
  const std::size_t k = x.rows();
  Matrix avg(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) avg(i, j) = 1.0 / static_cast<double>(i + 1);
  return tape.matmul(tape.constant(std::move(avg)), x);
}

HeadParams::HeadParams(core::ParameterStore& store, std::size_t dim, std::size_t n_pois,
                       std::size_t n_categories, core::Rng& rng) {
  poi_w = store.add("head_poi_W", core::init_weight(dim, n_pois, rng));
  poi_b = store.add("head_poi_b", Matrix(1, n_pois));
  time_w = store.add("head_time_W", core::init_weight(dim, 1, rng));
  time_b = store.add("head_time_b", Matrix(1, 1));
  cat_w = store.add("head_cat_W", core::init_weight(dim, n_categories, rng));
  cat_b = store.add("head_cat_b", Matrix(1, n_categories));
}

HeadOutputs heads(Tape& tape, const Tensor& enc, const HeadParams& params) {
  if (enc.cols() != params.poi_w.rows())
    throw ShapeError("heads: encoder width " + std::to_string(enc.cols()) + ", expected " +
                     std::to_string(params.poi_w.rows()));
  return {tape.add(tape.matmul(enc, params.poi_w), params.poi_b),
          tape.add(tape.matmul(enc, params.time_w), params.time_b),
          tape.add(tape.matmul(enc, params.cat_w), params.cat_b)};
}

std::vector<std::size_t> recommend(std::span<const double> last_row,
                                   std::span<const double> phi_row, std::size_t top_k) {
  if (!phi_row.empty() && phi_row.size() != last_row.size())
    throw ShapeError("recommend: score row and transition row differ in length");
  std::vector<double> score(last_row.begin(), last_row.end());
  for (std::size_t j = 0; j < phi_row.size(); ++j) score[j] += phi_row[j];
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  top_k = std::min(top_k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      return score[a] > score[b] || (score[a] == score[b] && a < b);
                    });
  order.resize(top_k);
  return order;
}

Tensor loss(Tape& tape, const HeadOutputs& out, const Tensor& phi_rows, const Targets& targets,
            const LossOptions& options) {
  const std::size_t k = out.poi.rows();
  if (k == 0 || targets.poi.empty())
    throw InputError("loss: no supervised positions");
  if (targets.poi.size() != k || targets.time.size() != k || targets.cat.size() != k)
    throw ShapeError("loss: " + std::to_string(k) + " positions but targets of length " +
                     std::to_string(targets.poi.size()));
  Tensor logits = phi_rows.defined() ? tape.add(out.poi, phi_rows) : out.poi;
  Tensor total = tape.cross_entropy_rows(logits, targets.poi);
  if (options.time_and_category) {
    Tensor t = tape.constant(Matrix::column_vector(targets.time));
    total = tape.add(total, tape.scale(tape.mse(out.time, t), options.time_weight));
    total = tape.add(total, tape.cross_entropy_rows(out.cat, targets.cat));
  }
  return total;
}

}  // namespace getnext::model
