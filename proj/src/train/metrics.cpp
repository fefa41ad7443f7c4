#include "getnext/train/metrics.hpp"

#include <stdexcept>
#include <string>

namespace getnext::train {

std::size_t pessimistic_rank(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size())
    throw std::out_of_range("target " + std::to_string(target) + " outside " +
                            std::to_string(scores.size()) + " scores");
  const double t = scores[target];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (j != target && scores[j] >= t) ++rank;
  return rank;
}

double Metrics::acc_at(std::size_t k) const {
  for (std::size_t i = 0; i < kTopK.size(); ++i)
    if (kTopK[i] == k) return acc[i];
  throw std::invalid_argument("no accuracy tracked at k=" + std::to_string(k));
}

void MetricAccumulator::add(std::size_t rank) {
  if (rank == 0) throw std::invalid_argument("ranks start at 1");
  ++count_;
  for (std::size_t i = 0; i < kTopK.size(); ++i)
    if (rank <= kTopK[i]) ++hits_[i];
  reciprocal_sum_ += 1.0 / static_cast<double>(rank);
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  count_ += other.count_;
  for (std::size_t i = 0; i < kTopK.size(); ++i) hits_[i] += other.hits_[i];
  reciprocal_sum_ += other.reciprocal_sum_;
}

Metrics MetricAccumulator::result() const {
  Metrics m;
  m.count = count_;
  if (count_ == 0) return m;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < kTopK.size(); ++i) m.acc[i] = static_cast<double>(hits_[i]) / n;
  m.mrr = reciprocal_sum_ / n;
  return m;
}

}  // namespace getnext::train
