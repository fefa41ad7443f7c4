#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace getnext::data {

struct CheckIn {
  std::string user_id;
  std::string poi_id;
  std::string category_id;
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t timestamp = 0;    // UTC seconds since epoch
  std::int32_t tz_offset_min = 0;  // local = UTC + offset; 0 when unknown

  std::int64_t local_seconds() const { return timestamp + std::int64_t{tz_offset_min} * 60; }

  friend bool operator==(const CheckIn&, const CheckIn&) = default;
};

// Seconds since local midnight, in [0, 86400).
std::int64_t seconds_of_day(const CheckIn& q);
// Local hour in [0, 24).
int local_hour(const CheckIn& q);
// Local day number (days since epoch).
std::int64_t local_day(const CheckIn& q);

struct Trajectory {
  std::string id;
  std::string user_id;
  std::vector<CheckIn> checkins;  // ascending timestamp, length >= 2

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Dense bijection between string ids and [0, size). Ids are numbered in
// lexicographic order so the numbering does not depend on input order.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<std::string> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(const std::string& id) const { return lookup_.contains(id); }
  std::optional<std::size_t> find(const std::string& id) const;
  std::size_t at(const std::string& id) const;
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  friend bool operator==(const IdIndex& a, const IdIndex& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> lookup_;
};

struct PoiMeta {
  double lat = 0.0;
  double lon = 0.0;
  std::size_t category = 0;        // index into Dataset::categories
  std::size_t train_frequency = 0; // check-ins in the train split

  friend bool operator==(const PoiMeta&, const PoiMeta&) = default;
};

enum class SplitScope { global, per_user };
// Which check-in decides the split of a trajectory that crosses a boundary.
enum class StraddleRule { first_checkin, last_checkin };
enum class FilterMode { single_pass, fixed_point };

struct PreprocessOptions {
  std::size_t min_poi_checkins = 10;
  std::size_t min_user_checkins = 10;
  double window_hours = 24.0;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  SplitScope scope = SplitScope::global;
  StraddleRule straddle = StraddleRule::first_checkin;
  FilterMode filter = FilterMode::fixed_point;
};

struct PreprocessReport {
  std::size_t raw_checkins = 0;
  std::size_t pois_removed = 0;
  std::size_t users_removed = 0;
  std::size_t singleton_trajectories = 0;
  std::size_t filter_rounds = 0;
};

struct Dataset {
  std::vector<Trajectory> train;
  std::vector<Trajectory> validation;
  std::vector<Trajectory> test;

  // Built from the train split only.
  IdIndex pois;
  IdIndex users;
  IdIndex categories;
  std::vector<PoiMeta> poi_meta;  // aligned with `pois`

  PreprocessReport report;

  bool poi_seen(const std::string& poi_id) const { return pois.contains(poi_id); }
  bool user_seen(const std::string& user_id) const { return users.contains(user_id); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.train == b.train && a.validation == b.validation && a.test == b.test &&
           a.pois == b.pois && a.users == b.users && a.categories == b.categories &&
           a.poi_meta == b.poi_meta;
  }
};

// Splits one user's time-ordered check-ins wherever consecutive check-ins are
// more than `window_hours` apart. Single check-in pieces are dropped.
std::vector<Trajectory> split_trajectories(const std::vector<CheckIn>& user_checkins,
                                           double window_hours,
                                           std::size_t* singletons = nullptr);

// Filters unpopular POIs then inactive users, cuts trajectories, and splits
// them chronologically into train/validation/test. Throws InputError when
// nothing survives.
Dataset preprocess(const std::vector<CheckIn>& raw, const PreprocessOptions& options = {});

// Rebuilds indices and POI metadata from already-split trajectories.
Dataset assemble(std::vector<Trajectory> train, std::vector<Trajectory> validation,
                 std::vector<Trajectory> test);

// Every check-in across the three splits.
std::vector<CheckIn> all_checkins(const Dataset& d);

enum class UserGroup { inactive, normal, very_active };
enum class LengthGroup { short_trajectory, middle, long_trajectory };

const char* to_string(UserGroup g);
const char* to_string(LengthGroup g);

struct CohortLabels {
  std::vector<UserGroup> user_group;       // aligned with Dataset::users
  std::vector<LengthGroup> test_length_group;  // aligned with Dataset::test
};

// Bottom/top `quantile` of users by train trajectory count, and of test
// trajectories by length. Ties are broken by index order; each extreme group
// keeps at least one member.
CohortLabels cohort_labels(const Dataset& d, double quantile = 0.15);

enum class SynthPattern { cycle, planted_shared_paths, uniform };

SynthPattern parse_pattern(const std::string& name);
const char* to_string(SynthPattern p);

struct SynthOptions {
  std::size_t n_users = 10;
  std::size_t n_pois = 20;
  std::size_t n_categories = 4;
  SynthPattern pattern = SynthPattern::uniform;
  std::uint64_t seed = 1;
  std::size_t checkins_per_user = 200;
};

// Deterministic synthetic corpus, sorted by (user_id, timestamp).
std::vector<CheckIn> synthesize(const SynthOptions& options);

}  // namespace getnext::data
