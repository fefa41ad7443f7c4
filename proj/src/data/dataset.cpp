#include "getnext/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "getnext/core/error.hpp"

namespace getnext::data {

namespace {
constexpr std::int64_t kDay = 86400;

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}
}  // namespace

std::int64_t seconds_of_day(const CheckIn& q) { return floor_mod(q.local_seconds(), kDay); }

int local_hour(const CheckIn& q) { return static_cast<int>(seconds_of_day(q) / 3600); }

std::int64_t local_day(const CheckIn& q) {
  return (q.local_seconds() - seconds_of_day(q)) / kDay;
}

IdIndex::IdIndex(std::vector<std::string> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) lookup_.emplace(ids_[i], i);
}

std::optional<std::size_t> IdIndex::find(const std::string& id) const {
  const auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t IdIndex::at(const std::string& id) const {
  const auto it = lookup_.find(id);
  if (it == lookup_.end()) throw InputError("unknown id '" + id + "'");
  return it->second;
}

std::vector<Trajectory> split_trajectories(const std::vector<CheckIn>& user_checkins,
                                           double window_hours, std::size_t* singletons) {
  std::vector<Trajectory> out;
  if (user_checkins.empty()) return out;
  const double window_s = window_hours * 3600.0;
  std::vector<CheckIn> current;
  std::size_t serial = 0;
  auto flush = [&] {
    if (current.size() >= 2) {
      Trajectory t;
      t.user_id = current.front().user_id;
      t.id = t.user_id + "_" + std::to_string(serial++);
      t.checkins = std::move(current);
      out.push_back(std::move(t));
    } else if (!current.empty() && singletons) {
      ++*singletons;
    }
    current.clear();
  };
  for (const CheckIn& q : user_checkins) {
    if (!current.empty() &&
        static_cast<double>(q.timestamp - current.back().timestamp) > window_s) {
      flush();
    }
    current.push_back(q);
  }
  flush();
  return out;
}

namespace {

bool by_user_time(const CheckIn& a, const CheckIn& b) {
  return std::tie(a.user_id, a.timestamp) < std::tie(b.user_id, b.timestamp);
}

struct FilterResult {
  std::vector<Trajectory> trajectories;
  std::size_t pois_removed = 0;
  std::size_t users_removed = 0;
  std::size_t singletons = 0;
  std::size_t rounds = 0;
};

// One round: drop unpopular POIs, then inactive users, then cut trajectories.
std::vector<Trajectory> filter_round(const std::vector<CheckIn>& input,
                                     const PreprocessOptions& o, FilterResult& stats) {
  std::map<std::string, std::size_t> poi_count;
  for (const CheckIn& q : input) ++poi_count[q.poi_id];
  std::vector<CheckIn> kept;
  for (const CheckIn& q : input)
    if (poi_count[q.poi_id] >= o.min_poi_checkins) kept.push_back(q);
  for (const auto& [id, n] : poi_count)
    if (n < o.min_poi_checkins) ++stats.pois_removed;

  std::map<std::string, std::size_t> user_count;
  for (const CheckIn& q : kept) ++user_count[q.user_id];
  std::vector<CheckIn> users_kept;
  for (const CheckIn& q : kept)
    if (user_count[q.user_id] >= o.min_user_checkins) users_kept.push_back(q);
  for (const auto& [id, n] : user_count)
    if (n < o.min_user_checkins) ++stats.users_removed;

  std::stable_sort(users_kept.begin(), users_kept.end(), by_user_time);
  std::vector<Trajectory> trajectories;
  std::size_t begin = 0;
  while (begin < users_kept.size()) {
    std::size_t end = begin;
    while (end < users_kept.size() && users_kept[end].user_id == users_kept[begin].user_id) ++end;
    std::vector<CheckIn> one(users_kept.begin() + static_cast<std::ptrdiff_t>(begin),
                             users_kept.begin() + static_cast<std::ptrdiff_t>(end));
    auto pieces = split_trajectories(one, o.window_hours, &stats.singletons);
    for (auto& t : pieces) trajectories.push_back(std::move(t));
    begin = end;
  }
  return trajectories;
}

std::vector<CheckIn> flatten(const std::vector<Trajectory>& ts) {
  std::vector<CheckIn> out;
  for (const auto& t : ts) out.insert(out.end(), t.checkins.begin(), t.checkins.end());
  return out;
}

// Assigns each trajectory to 0 (train), 1 (validation) or 2 (test).
std::vector<int> assign_splits(const std::vector<Trajectory>& ts, const PreprocessOptions& o) {
  // (timestamp, trajectory, position) orders every check-in uniquely.
  struct Ref {
    std::int64_t timestamp;
    std::size_t trajectory;
    std::size_t position;
  };
  std::vector<int> split(ts.size(), 0);
  auto rank_group = [&](const std::vector<std::size_t>& members) {
    std::vector<Ref> refs;
    for (std::size_t t : members)
      for (std::size_t p = 0; p < ts[t].checkins.size(); ++p)
        refs.push_back({ts[t].checkins[p].timestamp, t, p});
    std::sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) {
      return std::tie(a.timestamp, a.trajectory, a.position) <
             std::tie(b.timestamp, b.trajectory, b.position);
    });
    const auto n = static_cast<double>(refs.size());
    const auto train_end = static_cast<std::size_t>(std::floor(o.train_fraction * n));
    const auto val_end =
        static_cast<std::size_t>(std::floor((o.train_fraction + o.validation_fraction) * n));
    for (std::size_t r = 0; r < refs.size(); ++r) {
      const Ref& ref = refs[r];
      const std::size_t decisive = o.straddle == StraddleRule::first_checkin
                                       ? 0
                                       : ts[ref.trajectory].checkins.size() - 1;
      if (ref.position != decisive) continue;
      split[ref.trajectory] = r < train_end ? 0 : (r < val_end ? 1 : 2);
    }
  };
  if (o.scope == SplitScope::global) {
    std::vector<std::size_t> all(ts.size());
    std::iota(all.begin(), all.end(), 0);
    rank_group(all);
  } else {
    std::map<std::string, std::vector<std::size_t>> by_user;
    for (std::size_t t = 0; t < ts.size(); ++t) by_user[ts[t].user_id].push_back(t);
    for (const auto& [user, members] : by_user) rank_group(members);
  }
  return split;
}

}  // namespace

Dataset assemble(std::vector<Trajectory> train, std::vector<Trajectory> validation,
                 std::vector<Trajectory> test) {
  Dataset d;
  auto by_id = [](const Trajectory& a, const Trajectory& b) {
    return std::tie(a.user_id, a.checkins.front().timestamp, a.id) <
           std::tie(b.user_id, b.checkins.front().timestamp, b.id);
  };
  std::sort(train.begin(), train.end(), by_id);
  std::sort(validation.begin(), validation.end(), by_id);
  std::sort(test.begin(), test.end(), by_id);

  std::vector<std::string> pois, users, cats;
  for (const auto& t : train) {
    users.push_back(t.user_id);
    for (const auto& q : t.checkins) {
      pois.push_back(q.poi_id);
      cats.push_back(q.category_id);
    }
  }
  d.pois = IdIndex(std::move(pois));
  d.users = IdIndex(std::move(users));
  d.categories = IdIndex(std::move(cats));

  d.poi_meta.assign(d.pois.size(), PoiMeta{});
  std::vector<bool> filled(d.pois.size(), false);
  for (const auto& t : train) {
    for (const auto& q : t.checkins) {
      const std::size_t i = d.pois.at(q.poi_id);
      PoiMeta& m = d.poi_meta[i];
      if (!filled[i]) {
        m.lat = q.lat;
        m.lon = q.lon;
        m.category = d.categories.at(q.category_id);
        filled[i] = true;
      }
      ++m.train_frequency;
    }
  }
  d.train = std::move(train);
  d.validation = std::move(validation);
  d.test = std::move(test);
  return d;
}

Dataset preprocess(const std::vector<CheckIn>& raw, const PreprocessOptions& o) {
  if (raw.empty()) throw InputError("preprocess: no check-ins");
  if (o.window_hours <= 0.0) throw InputError("preprocess: window_hours must be positive");
  if (o.train_fraction <= 0.0 || o.validation_fraction < 0.0 ||
      o.train_fraction + o.validation_fraction > 1.0) {
    throw InputError("preprocess: invalid split fractions");
  }

  FilterResult stats;
  std::vector<CheckIn> current = raw;
  std::stable_sort(current.begin(), current.end(), by_user_time);
  std::vector<Trajectory> trajectories;
  while (true) {
    ++stats.rounds;
    FilterResult round;
    trajectories = filter_round(current, o, round);
    stats.pois_removed += round.pois_removed;
    stats.users_removed += round.users_removed;
    stats.singletons += round.singletons;
    std::vector<CheckIn> survivors = flatten(trajectories);
    const bool stable = survivors.size() == current.size();
    current = std::move(survivors);
    if (o.filter == FilterMode::single_pass || stable || current.empty()) break;
  }

  if (trajectories.empty()) {
    throw InputError("preprocess: all data filtered out (" + std::to_string(raw.size()) +
                     " check-ins in, " + std::to_string(stats.pois_removed) +
                     " POIs and " + std::to_string(stats.users_removed) +
                     " users removed, " + std::to_string(stats.singletons) +
                     " single-check-in trajectories dropped)");
  }

  const std::vector<int> split = assign_splits(trajectories, o);
  std::vector<Trajectory> parts[3];
  for (std::size_t t = 0; t < trajectories.size(); ++t)
    parts[split[t]].push_back(std::move(trajectories[t]));
  if (parts[0].empty()) throw InputError("preprocess: train split is empty");

  Dataset d = assemble(std::move(parts[0]), std::move(parts[1]), std::move(parts[2]));
  d.report.raw_checkins = raw.size();
  d.report.pois_removed = stats.pois_removed;
  d.report.users_removed = stats.users_removed;
  d.report.singleton_trajectories = stats.singletons;
  d.report.filter_rounds = stats.rounds;
  return d;
}

std::vector<CheckIn> all_checkins(const Dataset& d) {
  std::vector<CheckIn> out = flatten(d.train);
  for (const auto& q : flatten(d.validation)) out.push_back(q);
  for (const auto& q : flatten(d.test)) out.push_back(q);
  std::stable_sort(out.begin(), out.end(), by_user_time);
  return out;
}

const char* to_string(UserGroup g) {
  switch (g) {
    case UserGroup::inactive: return "inactive";
    case UserGroup::normal: return "normal";
    case UserGroup::very_active: return "very_active";
  }
  return "?";
}

const char* to_string(LengthGroup g) {
  switch (g) {
    case LengthGroup::short_trajectory: return "short";
    case LengthGroup::middle: return "middle";
    case LengthGroup::long_trajectory: return "long";
  }
  return "?";
}

namespace {

// Ranks items by (key, index) and labels the bottom and top `quantile`.
template <typename Group>
std::vector<Group> quantile_groups(const std::vector<std::size_t>& keys, double quantile,
                                   Group low, Group mid, Group high) {
  const std::size_t n = keys.size();
  std::vector<Group> out(n, mid);
  if (n == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::size_t n_low = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(quantile * static_cast<double>(n) + 1e-9)));
  n_low = std::min(n_low, n);
  std::size_t n_high = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(quantile * static_cast<double>(n) + 1e-9)));
  n_high = std::min(n_high, n - n_low);
  for (std::size_t r = 0; r < n_low; ++r) out[order[r]] = low;
  for (std::size_t r = n - n_high; r < n; ++r) out[order[r]] = high;
  return out;
}

}  // namespace

CohortLabels cohort_labels(const Dataset& d, double quantile) {
  if (d.train.empty()) throw InputError("cohort_labels: train split is empty");
  if (quantile < 0.0 || quantile > 0.5) throw InputError("cohort_labels: quantile outside [0, 0.5]");
  std::vector<std::size_t> counts(d.users.size(), 0);
  for (const auto& t : d.train) ++counts[d.users.at(t.user_id)];
  std::vector<std::size_t> lengths;
  for (const auto& t : d.test) lengths.push_back(t.checkins.size());
  CohortLabels labels;
  labels.user_group = quantile_groups(counts, quantile, UserGroup::inactive, UserGroup::normal,
                                      UserGroup::very_active);
  labels.test_length_group =
      quantile_groups(lengths, quantile, LengthGroup::short_trajectory, LengthGroup::middle,
                      LengthGroup::long_trajectory);
  return labels;
}

}  // namespace getnext::data
