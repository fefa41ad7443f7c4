#include "getnext/train/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "getnext/core/adam.hpp"
#include "getnext/core/error.hpp"
#include "getnext/data/io.hpp"
#include "getnext/train/evaluate.hpp"

namespace getnext::train {

void validate(const TrainConfig& c) {
  const auto& m = c.model;
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string("config: ") + what);
  };
  need(c.epochs > 0, "epochs must be positive");
  need(c.batch_size > 0, "batch_size must be positive");
  need(c.lr > 0.0, "lr must be positive");
  need(c.weight_decay >= 0.0, "weight_decay must be non-negative");
  need(m.poi_dim > 0 && m.time_dim > 1, "poi_dim must be positive and time_dim at least 2");
  need(m.encoder_layers > 0 && m.heads > 0 && m.ff_dim > 0, "encoder sizes must be positive");
  need(m.embedding_dim() % m.heads == 0, "2*(poi_dim+time_dim) must be divisible by heads");
  need(m.tam_hidden > 0 && m.max_len > 1, "tam_hidden and max_len must be positive");
  need(m.dropout >= 0.0 && m.dropout < 1.0, "dropout must be in [0, 1)");
  need(m.time_loss_weight >= 0.0, "time_loss_weight must be non-negative");
  for (std::size_t w : m.gcn_hidden) need(w > 0, "gcn channel widths must be positive");
}

TrainResult train(model::Model& m, const data::Dataset& d, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(config);
  if (m.n_pois() != d.pois.size() || m.n_users() != d.users.size() ||
      m.n_categories() != d.categories.size())
    throw InputError("model dimensions do not match the dataset");
  const auto samples = model::make_samples(d, d.train);
  if (samples.empty()) throw InputError("no trainable trajectory in the train split");
  for (const auto& s : samples)
    if (s.length() - 1 > config.model.max_len)
      throw InputError("trajectory " + s.trajectory_id + " is longer than max_len");
  {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples)
      for (std::size_t i = 1; i < s.length(); ++i, ++n) sum += s.day_time[i];
    m.center_time_head(sum / static_cast<double>(n));
  }
  const bool have_val = !model::make_samples(d, d.validation).empty();

  std::vector<core::Tensor> params = m.params().all();
  core::AdamOptions ao;
  ao.lr = config.lr;
  ao.weight_decay = config.weight_decay;
  core::AdamState adam = core::make_adam_state(params, ao);

  core::Rng root(config.seed);
  core::Rng order_rng = root.fork(101), dropout_rng = root.fork(202);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  EvalOptions eo;
  eo.last_only = config.eval_last_only;

  TrainResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      m.params().zero_grad();
      core::Tape tape;
      const model::GraphState g = m.graph_forward(tape, dropout_rng, true);
      std::vector<core::Tensor> losses;
      for (std::size_t i = start; i < end; ++i)
        losses.push_back(m.sample_loss(tape, g, samples[order[i]], dropout_rng, true));
      core::Tensor batch = tape.mean(tape.concat_rows(losses));
      for (const auto& l : losses) loss_sum += l.item();
      tape.backward(batch);
      core::adam_step(params, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(samples.size());
    double score;
    if (have_val) {
      const Metrics v = evaluate(m, d, d.validation, eo).overall;
      rec.val_acc1 = v.acc[0];
      rec.val_mrr = v.mrr;
      score = v.acc[0];
    } else {
      rec.val_acc1 = rec.val_mrr = std::numeric_limits<double>::quiet_NaN();
      score = -rec.train_loss;
    }
    if (!std::isfinite(rec.train_loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    if (score > best_score) {
      best_score = score;
      result.best_epoch = epoch;
      result.best = core::snapshot(m.params());
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  core::restore(m.params(), result.best);
  return result;
}

void write_log_header(std::ostream& out) { out << "epoch,train_loss,val_acc1,val_mrr\n"; }

void write_log_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << data::format_double(r.train_loss) << ','
      << data::format_double(r.val_acc1) << ',' << data::format_double(r.val_mrr) << '\n';
}

}  // namespace getnext::train
