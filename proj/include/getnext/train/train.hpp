#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "getnext/core/checkpoint.hpp"
#include "getnext/data/dataset.hpp"
#include "getnext/model/model.hpp"

namespace getnext::train {

struct TrainConfig {
  model::ModelConfig model;
  std::size_t epochs = 200;
  std::size_t batch_size = 20;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::uint64_t seed = 42;
  bool eval_last_only = false;
};

// Throws InputError for non-positive sizes or rates.
void validate(const TrainConfig& c);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc1 = 0.0;  // NaN when there is no validation sample
  double val_mrr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  std::vector<core::NamedBlob> best;  // parameters at best_epoch
};

// Adam over every parameter, one step per batch of trajectories. The best
// epoch is the one with the highest validation Acc@1 (earliest on ties), or
// the lowest train loss when the validation split has no usable sample. The
// model is left holding the best parameters.
TrainResult train(model::Model& m, const data::Dataset& d, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// epoch,train_loss,val_acc1,val_mrr
void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochRecord& r);

}  // namespace getnext::train
