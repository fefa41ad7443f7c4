#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace getnext::train {

inline constexpr std::array<std::size_t, 4> kTopK = {1, 5, 10, 20};

// 1 + #(scores above the target) + #(other candidates tied with it).
std::size_t pessimistic_rank(std::span<const double> scores, std::size_t target);

struct Metrics {
  std::size_t count = 0;
  std::array<double, kTopK.size()> acc{};  // aligned with kTopK
  double mrr = 0.0;

  // Throws std::invalid_argument for k not in kTopK.
  double acc_at(std::size_t k) const;
};

class MetricAccumulator {
 public:
  void add(std::size_t rank);
  void merge(const MetricAccumulator& other);
  std::size_t count() const noexcept { return count_; }
  Metrics result() const;

 private:
  std::size_t count_ = 0;
  std::array<std::size_t, kTopK.size()> hits_{};
  double reciprocal_sum_ = 0.0;
};

}  // namespace getnext::train
