#include "getnext/train/evaluate.hpp"

#include <ostream>

#include "getnext/core/error.hpp"
#include "getnext/data/io.hpp"

namespace getnext::train {

namespace {

// Ranks every supervised position of one sample.
void score_sample(const model::Model& m, const model::FrozenGraph& g, const model::Sample& s,
                  const EvalOptions& options, MetricAccumulator& acc,
                  std::vector<Prediction>* keep, MetricAccumulator* extra1 = nullptr,
                  MetricAccumulator* extra2 = nullptr) {
  const core::Matrix scores = m.score_positions(g, s);
  const std::size_t first = options.last_only ? scores.rows() - 1 : 0;
  for (std::size_t i = first; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const std::size_t target = s.poi[i + 1];
    const std::size_t rank = pessimistic_rank(row, target);
    acc.add(rank);
    if (extra1) extra1->add(rank);
    if (extra2) extra2->add(rank);
    if (keep) {
      Prediction p{s.trajectory_id, i + 1, target, rank, {}};
      if (options.keep_predictions) p.scores.assign(row.begin(), row.end());
      keep->push_back(std::move(p));
    }
  }
}

}  // namespace

EvalReport evaluate(const model::Model& m, const data::Dataset& d,
                    const std::vector<data::Trajectory>& split, const EvalOptions& options) {
  const auto samples = model::make_samples(d, split);
  if (samples.empty()) throw InputError("evaluation set is empty after dropping unseen users/POIs");
  const model::FrozenGraph g = m.freeze();
  EvalReport r;
  MetricAccumulator acc;
  for (const auto& s : samples)
    score_sample(m, g, s, options, acc, options.keep_predictions ? &r.predictions : nullptr);
  r.overall = acc.result();
  return r;
}

EvalReport cohort_evaluate(const model::Model& m, const data::Dataset& d,
                           const EvalOptions& options, double quantile) {
  const data::CohortLabels labels = data::cohort_labels(d, quantile);
  const model::FrozenGraph g = m.freeze();
  MetricAccumulator all;
  std::map<std::string, MetricAccumulator> groups;
  EvalReport r;
  for (std::size_t t = 0; t < d.test.size(); ++t) {
    const auto s = model::make_sample(d, d.test[t]);
    if (!s) continue;
    auto& by_user = groups[std::string("user_") + data::to_string(labels.user_group[s->user])];
    auto& by_len =
        groups[std::string("length_") + data::to_string(labels.test_length_group[t])];
    score_sample(m, g, *s, options, all, options.keep_predictions ? &r.predictions : nullptr,
                 &by_user, &by_len);
  }
  if (all.count() == 0)
    throw InputError("test split is empty after dropping unseen users/POIs");
  r.overall = all.result();
  for (const auto& [name, acc] : groups)
    if (acc.count() > 0) r.cohorts[name] = acc.result();
  return r;
}

namespace {

template <typename Emit>
void each_metric(const EvalReport& r, Emit emit) {
  auto one = [&](const std::string& cohort, const Metrics& m) {
    emit(cohort, "count", std::to_string(m.count));
    for (std::size_t i = 0; i < kTopK.size(); ++i)
      emit(cohort, "acc@" + std::to_string(kTopK[i]), data::format_double(m.acc[i]));
    emit(cohort, "mrr", data::format_double(m.mrr));
  };
  one("all", r.overall);
  for (const auto& [name, m] : r.cohorts) one(name, m);
}

}  // namespace

void write_report_text(std::ostream& out, const EvalReport& r) {
  each_metric(r, [&](const std::string& c, const std::string& k, const std::string& v) {
    out << c << '.' << k << '=' << v << '\n';
  });
}

void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << "cohort,metric,value\n";
  each_metric(r, [&](const std::string& c, const std::string& k, const std::string& v) {
    out << c << ',' << k << ',' << v << '\n';
  });
}

}  // namespace getnext::train
