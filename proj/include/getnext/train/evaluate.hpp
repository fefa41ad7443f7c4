#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "getnext/data/dataset.hpp"
#include "getnext/model/model.hpp"
#include "getnext/train/metrics.hpp"

namespace getnext::train {

struct EvalOptions {
  bool last_only = false;         // one prediction per trajectory instead of every position
  bool keep_predictions = false;  // store score vectors for auditing
};

struct Prediction {
  std::string trajectory_id;
  std::size_t position = 0;  // index of the predicted check-in
  std::size_t target = 0;
  std::size_t rank = 0;
  std::vector<double> scores;  // only with keep_predictions
};

struct EvalReport {
  Metrics overall;
  // Cohorts with no samples are absent.
  std::map<std::string, Metrics> cohorts;
  std::vector<Prediction> predictions;
};

// Ranks the true next POI at every supervised position of the split.
// Trajectories of unknown users, and check-ins at unknown POIs, are skipped.
// Throws InputError when nothing is left to evaluate.
EvalReport evaluate(const model::Model& m, const data::Dataset& d,
                    const std::vector<data::Trajectory>& split, const EvalOptions& options = {});

// Test-split evaluation partitioned by user activity and trajectory length.
EvalReport cohort_evaluate(const model::Model& m, const data::Dataset& d,
                           const EvalOptions& options = {}, double quantile = 0.15);

// cohort.metric=value lines, overall first under the name "all".
void write_report_text(std::ostream& out, const EvalReport& r);
// cohort,metric,value
void write_report_csv(std::ostream& out, const EvalReport& r);

}  // namespace getnext::train
