#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "getnext/core/error.hpp"
#include "getnext/data/dataset.hpp"
#include "getnext/data/io.hpp"

using namespace getnext;
using namespace getnext::data;

namespace {

CheckIn q(const std::string& user, const std::string& poi, std::int64_t t,
          const std::string& cat = "c0") {
  return CheckIn{user, poi, cat, 40.7, -74.0, t, 0};
}

IngestResult from_csv(const std::string& text) {
  std::istringstream in(text);
  return ingest(in, Format::canonical_csv);
}

const char* kHeader = "user_id,poi_id,category_id,lat,lon,timestamp_utc\n";

}  // namespace

TEST_CASE("ingest: empty input gives nothing") {
  const auto r = from_csv("");
  CHECK(r.checkins.empty());
  CHECK(r.errors.empty());
  const auto h = from_csv(kHeader);
  CHECK(h.checkins.empty());
}

TEST_CASE("ingest: one valid row round-trips its fields") {
  const auto r = from_csv(std::string(kHeader) + "u1,p9,\"Bar, Pub\",40.5,-73.25,1333238400\n");
  REQUIRE(r.checkins.size() == 1);
  const CheckIn& c = r.checkins[0];
  CHECK(c.user_id == "u1");
  CHECK(c.poi_id == "p9");
  CHECK(c.category_id == "Bar, Pub");
  CHECK(c.lat == 40.5);
  CHECK(c.lon == -73.25);
  CHECK(c.timestamp == 1333238400);
}

TEST_CASE("ingest: rows of one user come back in time order") {
  const auto r = from_csv(std::string(kHeader) +
                          "u1,a,c,0,0,300\n"
                          "u1,b,c,0,0,100\n"
                          "u1,c,c,0,0,200\n");
  REQUIRE(r.checkins.size() == 3);
  CHECK(r.checkins[0].poi_id == "b");
  CHECK(r.checkins[1].poi_id == "c");
  CHECK(r.checkins[2].poi_id == "a");
}

TEST_CASE("ingest: malformed rows are reported with their line") {
  const auto r = from_csv(std::string(kHeader) +
                          "u1,a,c,0,0,100\n"
                          "u1,b,c,0,0,yesterday\n"
                          "u1,c,c,95,0,200\n"
                          "u1,d,c,0,0,300\n"
                          "u1,e,c,0,0,400\n");
  CHECK(r.checkins.size() == 3);
  REQUIRE(r.errors.size() == 2);
  CHECK(r.errors[0].line == 3);
  CHECK(r.errors[0].message.find("timestamp") != std::string::npos);
  CHECK(r.errors[1].line == 4);
}

TEST_CASE("ingest: mostly malformed input is a hard failure") {
  CHECK_THROWS_AS(from_csv(std::string(kHeader) + "u1,a,c,0,0,x\nu1,a,c,0,0,y\nu1,a,c,0,0,5\n"),
                  InputError);
  CHECK_THROWS_AS(from_csv("user,poi\nu,p\n"), InputError);
  CHECK_THROWS_AS(ingest(std::filesystem::path("/nonexistent/checkins.csv"), Format::canonical_csv),
                  InputError);
}

TEST_CASE("ingest: foursquare tsv converts to UTC and keeps the offset") {
  // 2012-04-03 18:00:09 UTC; local offset -240 minutes.
  std::istringstream in(
      "470\t49bbd6c0f964a520f4531fe3\t4bf58dd8d48988d127951735\tArts & Crafts Store\t"
      "40.719810375488535\t-74.00258103213994\t-240\tTue Apr 03 18:00:09 +0000 2012\n");
  const auto r = ingest(in, Format::foursquare_tsv);
  REQUIRE(r.checkins.size() == 1);
  CHECK(r.checkins[0].timestamp == 1333476009);
  CHECK(r.checkins[0].tz_offset_min == -240);
  CHECK(local_hour(r.checkins[0]) == 14);
  CHECK(parse_foursquare_time("Tue Apr 03 18:00:09 +0100 2012") == 1333476009 - 3600);
  CHECK_THROWS_AS(parse_foursquare_time("Tue Foo 03 18:00:09 +0000 2012"), InputError);
}

TEST_CASE("csv writer output parses back to the same check-ins") {
  std::vector<CheckIn> rows{q("u\"1", "p,1", 1000), q("u2", "p2", 2000, "a\nb")};
  rows[1].tz_offset_min = 540;
  rows[1].lat = 0.1 + 0.2;
  std::ostringstream out;
  write_canonical_csv(out, rows);
  const auto back = from_csv(out.str());
  CHECK(back.errors.empty());
  CHECK(back.checkins == rows);
}

TEST_CASE("preprocess: twelve check-ins in one hour form one train trajectory") {
  std::vector<CheckIn> raw;
  for (int i = 0; i < 12; ++i) raw.push_back(q("u1", "A", 1'000'000 + i * 300));
  const Dataset d = preprocess(raw);
  REQUIRE(d.train.size() == 1);
  CHECK(d.train[0].checkins.size() == 12);
  CHECK(d.validation.empty());
  CHECK(d.test.empty());
}

TEST_CASE("preprocess: every POI below threshold leaves nothing") {
  std::vector<CheckIn> raw;
  for (int i = 0; i < 10; ++i) raw.push_back(q("u1", "P" + std::to_string(i), 1000 + i * 60));
  CHECK_THROWS_AS(preprocess(raw), InputError);
}

TEST_CASE("split_trajectories: two check-ins 25 hours apart are both dropped") {
  std::size_t singles = 0;
  const auto ts =
      split_trajectories({q("u", "A", 1000), q("u", "B", 1000 + 25 * 3600)}, 24.0, &singles);
  CHECK(ts.empty());
  CHECK(singles == 2);
  PreprocessOptions loose;
  loose.min_poi_checkins = 1;
  loose.min_user_checkins = 1;
  CHECK_THROWS_AS(preprocess({q("u", "A", 1000), q("u", "B", 1000 + 25 * 3600)}, loose),
                  InputError);
}

TEST_CASE("preprocess: straddle rule and split scope are honoured") {
  std::vector<CheckIn> raw;
  for (int i = 0; i < 12; ++i) raw.push_back(q("u1", "A", 1'000'000 + i * 300));
  PreprocessOptions last;
  last.straddle = StraddleRule::last_checkin;
  // The single trajectory ends in the test period, so train is empty.
  CHECK_THROWS_AS(preprocess(raw, last), InputError);
}

TEST_CASE("synthesize: cycle pattern is exactly periodic") {
  SynthOptions o;
  o.n_users = 1;
  o.n_pois = 4;
  o.n_categories = 2;
  o.pattern = SynthPattern::cycle;
  o.seed = 7;
  const auto rows = synthesize(o);
  REQUIRE(rows.size() == o.checkins_per_user);
  const char* expect[] = {"p00000", "p00001", "p00002", "p00003"};
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].poi_id == expect[i % 4]);
}

TEST_CASE("synthesize: same seed gives byte-identical output") {
  for (auto pattern : {SynthPattern::cycle, SynthPattern::uniform,
                       SynthPattern::planted_shared_paths}) {
    SynthOptions o;
    o.pattern = pattern;
    o.seed = 7;
    std::ostringstream a, b;
    write_canonical_csv(a, synthesize(o));
    write_canonical_csv(b, synthesize(o));
    CHECK(a.str() == b.str());
    o.seed = 8;
    std::ostringstream c;
    write_canonical_csv(c, synthesize(o));
    if (pattern != SynthPattern::cycle) CHECK(a.str() != c.str());
  }
}

TEST_CASE("synthesize: uniform POI frequencies stay within a factor of 3") {
  SynthOptions o;
  o.n_users = 10;
  o.n_pois = 20;
  o.pattern = SynthPattern::uniform;
  o.seed = 1;
  const auto rows = synthesize(o);
  REQUIRE(rows.size() == 2000);
  std::map<std::string, std::size_t> freq;
  for (const auto& r : rows) ++freq[r.poi_id];
  REQUIRE(freq.size() == 20);
  std::size_t lo = rows.size(), hi = 0;
  for (const auto& [id, n] : freq) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  CHECK(static_cast<double>(hi) / static_cast<double>(lo) < 3.0);
}

TEST_CASE("synthesize: invalid sizes are rejected") {
  SynthOptions o;
  o.n_pois = 3;
  CHECK_THROWS_AS(synthesize(o), InputError);
  o.n_pois = 10;
  o.n_categories = 0;
  CHECK_THROWS_AS(synthesize(o), InputError);
  CHECK_THROWS_AS(parse_pattern("spiral"), InputError);
}

TEST_CASE("preprocess invariants hold on random synthetic corpora") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SynthOptions o;
    o.n_users = 6 + seed;
    o.n_pois = 15 + 3 * seed;
    o.n_categories = 3;
    o.pattern = seed % 2 ? SynthPattern::uniform : SynthPattern::planted_shared_paths;
    o.seed = seed;
    o.checkins_per_user = 60;
    PreprocessOptions po;
    po.min_poi_checkins = 5;
    po.min_user_checkins = 5;
    const auto raw = synthesize(o);
    const Dataset d = preprocess(raw, po);
    CAPTURE(seed);

    // No short trajectories; each trajectory single-user and time ordered.
    std::multiset<std::tuple<std::string, std::int64_t, std::string>> seen;
    std::int64_t train_last = 0, val_first = INT64_MAX;
    for (const auto* split : {&d.train, &d.validation, &d.test}) {
      for (const auto& t : *split) {
        CHECK(t.checkins.size() >= 2);
        for (std::size_t i = 0; i < t.checkins.size(); ++i) {
          CHECK(t.checkins[i].user_id == t.user_id);
          if (i) {
            CHECK(t.checkins[i].timestamp >= t.checkins[i - 1].timestamp);
            CHECK(t.checkins[i].timestamp - t.checkins[i - 1].timestamp <= 24 * 3600);
          }
          seen.insert({t.checkins[i].user_id, t.checkins[i].timestamp, t.checkins[i].poi_id});
        }
      }
    }
    // Split exclusivity: every surviving check-in appears exactly once.
    const auto everything = all_checkins(d);
    CHECK(seen.size() == everything.size());
    // Chronology: trajectories are split by their first check-in.
    for (const auto& t : d.train) train_last = std::max(train_last, t.checkins.front().timestamp);
    for (const auto& t : d.validation) val_first = std::min(val_first, t.checkins.front().timestamp);
    CHECK(train_last <= val_first);

    // Bijective, train-only indices; unseen ids never indexed.
    for (std::size_t i = 0; i < d.pois.size(); ++i) CHECK(d.pois.at(d.pois.id(i)) == i);
    std::set<std::string> train_pois;
    for (const auto& t : d.train)
      for (const auto& c : t.checkins) train_pois.insert(c.poi_id);
    CHECK(train_pois.size() == d.pois.size());
    for (const auto* split : {&d.validation, &d.test})
      for (const auto& t : *split)
        for (const auto& c : t.checkins) CHECK(d.poi_seen(c.poi_id) == train_pois.contains(c.poi_id));
    std::size_t freq_total = 0;
    for (const auto& m : d.poi_meta) freq_total += m.train_frequency;
    std::size_t train_checkins = 0;
    for (const auto& t : d.train) train_checkins += t.checkins.size();
    CHECK(freq_total == train_checkins);

    // Idempotence on the surviving check-ins.
    const Dataset again = preprocess(everything, po);
    CHECK(again == d);
  }
}

TEST_CASE("prepared directory round-trips the dataset") {
  SynthOptions o;
  o.pattern = SynthPattern::uniform;
  o.checkins_per_user = 80;
  const Dataset d = preprocess(synthesize(o));
  const auto dir = std::filesystem::temp_directory_path() / "getnext_prepared_test";
  std::filesystem::remove_all(dir);
  write_prepared(dir, d);
  const Dataset back = read_prepared(dir);
  CHECK(back == d);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_prepared(dir), InputError);
}

TEST_CASE("cohort labels") {
  auto build = [](bool distinct) {
    std::vector<Trajectory> train;
    for (int u = 0; u < 100; ++u) {
      char name[16];
      std::snprintf(name, sizeof(name), "u%03d", u);
      const int count = distinct ? u + 1 : 3;
      for (int k = 0; k < count; ++k) {
        Trajectory t;
        t.user_id = name;
        t.id = std::string(name) + "_" + std::to_string(k);
        t.checkins = {q(name, "A", 1000 + k * 100000), q(name, "B", 1060 + k * 100000)};
        train.push_back(t);
      }
    }
    return assemble(std::move(train), {}, {});
  };
  auto tally = [](const CohortLabels& l) {
    std::map<UserGroup, int> n;
    for (auto g : l.user_group) ++n[g];
    return n;
  };
  SUBCASE("distinct counts") {
    const auto l = cohort_labels(build(true));
    auto n = tally(l);
    CHECK(n[UserGroup::inactive] == 15);
    CHECK(n[UserGroup::normal] == 70);
    CHECK(n[UserGroup::very_active] == 15);
    CHECK(l.user_group[0] == UserGroup::inactive);  // u000 has 1 trajectory
    CHECK(l.user_group[99] == UserGroup::very_active);
  }
  SUBCASE("identical counts fall back to id order") {
    const auto d = build(false);
    const auto l = cohort_labels(d);
    auto n = tally(l);
    CHECK(n[UserGroup::inactive] == 15);
    CHECK(n[UserGroup::very_active] == 15);
    for (int u = 0; u < 15; ++u) CHECK(l.user_group[u] == UserGroup::inactive);
    for (int u = 85; u < 100; ++u) CHECK(l.user_group[u] == UserGroup::very_active);
    CHECK(cohort_labels(d).user_group == l.user_group);
  }
  SUBCASE("tiny populations keep one member per extreme") {
    std::vector<Trajectory> train;
    for (int u = 0; u < 3; ++u) {
      Trajectory t;
      t.user_id = "u" + std::to_string(u);
      t.id = t.user_id + "_0";
      t.checkins = {q(t.user_id, "A", 1000), q(t.user_id, "B", 1060)};
      train.push_back(t);
    }
    auto n = tally(cohort_labels(assemble(std::move(train), {}, {})));
    CHECK(n[UserGroup::inactive] == 1);
    CHECK(n[UserGroup::normal] == 1);
    CHECK(n[UserGroup::very_active] == 1);
  }
}
