#include "getnext/data/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "getnext/core/error.hpp"

namespace getnext::data {

Format parse_format(const std::string& name) {
  if (name == "canonical" || name == "canonical_csv" || name == "csv") return Format::canonical_csv;
  if (name == "foursquare" || name == "foursquare_tsv" || name == "tsv") return Format::foursquare_tsv;
  throw InputError("unknown input format '" + name + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

template <typename Int>
bool parse_int(const std::string& s, Int& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Validates coordinates and timestamp; returns an error message or empty.
std::string validate(const CheckIn& q) {
  if (q.user_id.empty() || q.poi_id.empty()) return "empty user or POI id";
  if (q.lat < -90.0 || q.lat > 90.0) return "latitude out of range";
  if (q.lon < -180.0 || q.lon > 180.0) return "longitude out of range";
  if (q.timestamp <= 0) return "timestamp must be positive";
  return {};
}

void finish(IngestResult& r, const std::string& source) {
  if (r.rows_read > 0 && r.errors.size() * 2 > r.rows_read) {
    throw InputError(source + ": " + std::to_string(r.errors.size()) + " of " +
                     std::to_string(r.rows_read) + " rows malformed (first at line " +
                     std::to_string(r.errors.front().line) + ": " + r.errors.front().message +
                     ")");
  }
  std::vector<std::size_t> order(r.checkins.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const CheckIn& x = r.checkins[a];
    const CheckIn& y = r.checkins[b];
    return std::tie(x.user_id, x.timestamp) < std::tie(y.user_id, y.timestamp);
  });
  std::vector<CheckIn> sorted;
  std::vector<std::string> ids;
  for (std::size_t i : order) {
    sorted.push_back(std::move(r.checkins[i]));
    if (!r.trajectory_ids.empty()) ids.push_back(std::move(r.trajectory_ids[i]));
  }
  r.checkins = std::move(sorted);
  r.trajectory_ids = std::move(ids);
}

IngestResult ingest_canonical(std::istream& in, const std::string& source) {
  IngestResult r;
  std::vector<std::size_t> lines;
  const auto records = parse_csv(in, &lines);
  if (records.empty()) return r;

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < records[0].size(); ++i) col[trim(records[0][i])] = i;
  for (const char* need : {"user_id", "poi_id", "category_id", "lat", "lon", "timestamp_utc"}) {
    if (!col.contains(need)) {
      throw InputError(source + ": header lacks column '" + need + "'");
    }
  }
  const bool has_tz = col.contains("tz_offset_min");
  const bool has_traj = col.contains("trajectory_id");
  std::size_t max_col = 0;
  for (const auto& [name, i] : col) max_col = std::max(max_col, i);

  for (std::size_t k = 1; k < records.size(); ++k) {
    const auto& f = records[k];
    if (f.size() == 1 && trim(f[0]).empty()) continue;
    ++r.rows_read;
    auto fail = [&](const std::string& msg) { r.errors.push_back({lines[k], msg}); };
    if (f.size() <= max_col) {
      fail("expected " + std::to_string(col.size()) + " fields, got " + std::to_string(f.size()));
      continue;
    }
    CheckIn q;
    q.user_id = f[col["user_id"]];
    q.poi_id = f[col["poi_id"]];
    q.category_id = f[col["category_id"]];
    if (!parse_double(trim(f[col["lat"]]), q.lat) || !parse_double(trim(f[col["lon"]]), q.lon)) {
      fail("unparsable coordinates");
      continue;
    }
    if (!parse_int(trim(f[col["timestamp_utc"]]), q.timestamp)) {
      fail("unparsable timestamp '" + f[col["timestamp_utc"]] + "'");
      continue;
    }
    if (has_tz && !parse_int(trim(f[col["tz_offset_min"]]), q.tz_offset_min)) {
      fail("unparsable tz_offset_min");
      continue;
    }
    if (const std::string err = validate(q); !err.empty()) {
      fail(err);
      continue;
    }
    r.checkins.push_back(std::move(q));
    if (has_traj) r.trajectory_ids.push_back(f[col["trajectory_id"]]);
  }
  finish(r, source);
  return r;
}

IngestResult ingest_foursquare(std::istream& in, const std::string& source) {
  IngestResult r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++r.rows_read;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) f.push_back(field);
    if (!line.empty() && line.back() == '\t') f.emplace_back();
    if (f.size() != 8) {
      r.errors.push_back({lineno, "expected 8 tab-separated fields, got " + std::to_string(f.size())});
      continue;
    }
    CheckIn q;
    q.user_id = trim(f[0]);
    q.poi_id = trim(f[1]);
    q.category_id = trim(f[2]);
    std::int64_t offset = 0;
    if (!parse_double(trim(f[4]), q.lat) || !parse_double(trim(f[5]), q.lon)) {
      r.errors.push_back({lineno, "unparsable coordinates"});
      continue;
    }
    if (!parse_int(trim(f[6]), offset)) {
      r.errors.push_back({lineno, "unparsable timezone offset"});
      continue;
    }
    try {
      q.timestamp = parse_foursquare_time(trim(f[7]));
    } catch (const InputError& e) {
      r.errors.push_back({lineno, e.what()});
      continue;
    }
    q.tz_offset_min = static_cast<std::int32_t>(offset);
    if (const std::string err = validate(q); !err.empty()) {
      r.errors.push_back({lineno, err});
      continue;
    }
    r.checkins.push_back(std::move(q));
  }
  finish(r, source);
  return r;
}

}  // namespace

std::int64_t parse_foursquare_time(const std::string& text) {
  static const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::istringstream ss(text);
  std::string weekday, month, clock, zone;
  int day = 0, year = 0;
  if (!(ss >> weekday >> month >> day >> clock >> zone >> year)) {
    throw InputError("unparsable time '" + text + "'");
  }
  std::string rest;
  if (ss >> rest) throw InputError("unparsable time '" + text + "'");
  int mon = 0;
  for (int i = 0; i < 12; ++i)
    if (month == kMonths[i]) mon = i + 1;
  int hh = 0, mm = 0, sec = 0;
  char c1 = 0, c2 = 0;
  std::istringstream cs(clock);
  if (mon == 0 || !(cs >> hh >> c1 >> mm >> c2 >> sec) || c1 != ':' || c2 != ':' || hh > 23 ||
      mm > 59 || sec > 60 || zone.size() != 5 || (zone[0] != '+' && zone[0] != '-')) {
    throw InputError("unparsable time '" + text + "'");
  }
  int zh = 0, zm = 0;
  if (!parse_int(zone.substr(1, 2), zh) || !parse_int(zone.substr(3, 2), zm)) {
    throw InputError("unparsable time zone in '" + text + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(mon)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw InputError("invalid date in '" + text + "'");
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t zone_s = (zone[0] == '-' ? -1 : 1) * (zh * 3600 + zm * 60);
  return days * 86400 + hh * 3600 + mm * 60 + sec - zone_s;
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in,
                                                std::vector<std::size_t>* record_lines) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t record_start = 1;
  char ch;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    if (record_lines) record_lines->push_back(record_start);
    any = false;
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (!any) record_start = line;
    any = true;
    switch (ch) {
      case '"':
        in_quotes = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        if (in.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
    }
  }
  if (in_quotes) throw InputError("csv: unterminated quoted field starting on line " +
                                  std::to_string(record_start));
  if (any) end_record();
  return records;
}

IngestResult ingest(std::istream& in, Format format, const std::string& source) {
  return format == Format::canonical_csv ? ingest_canonical(in, source)
                                         : ingest_foursquare(in, source);
}

IngestResult ingest(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read input file " + path.string());
  return ingest(in, format, path.string());
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_rows(std::ostream& out, const std::vector<const CheckIn*>& rows,
                const std::vector<const std::string*>* traj_ids) {
  const bool tz = std::any_of(rows.begin(), rows.end(),
                              [](const CheckIn* q) { return q->tz_offset_min != 0; });
  out << "user_id,poi_id,category_id,lat,lon,timestamp_utc";
  if (tz) out << ",tz_offset_min";
  if (traj_ids) out << ",trajectory_id";
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CheckIn& q = *rows[i];
    out << quote(q.user_id) << ',' << quote(q.poi_id) << ',' << quote(q.category_id) << ','
        << format_double(q.lat) << ',' << format_double(q.lon) << ',' << q.timestamp;
    if (tz) out << ',' << q.tz_offset_min;
    if (traj_ids) out << ',' << quote(*(*traj_ids)[i]);
    out << '\n';
  }
}

}  // namespace

void write_canonical_csv(std::ostream& out, const std::vector<CheckIn>& checkins) {
  std::vector<const CheckIn*> rows;
  for (const auto& q : checkins) rows.push_back(&q);
  write_rows(out, rows, nullptr);
}

void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  std::vector<const CheckIn*> rows;
  std::vector<const std::string*> ids;
  for (const auto& t : trajectories) {
    for (const auto& q : t.checkins) {
      rows.push_back(&q);
      ids.push_back(&t.id);
    }
  }
  write_rows(out, rows, &ids);
}

namespace {

const char* kSplitFiles[3] = {"train.csv", "validation.csv", "test.csv"};

std::vector<Trajectory> read_split(const std::filesystem::path& path) {
  IngestResult r = ingest(path, Format::canonical_csv);
  if (!r.errors.empty()) {
    throw InputError(path.string() + ": line " + std::to_string(r.errors.front().line) + ": " +
                     r.errors.front().message);
  }
  if (!r.checkins.empty() && r.trajectory_ids.empty()) {
    throw InputError(path.string() + ": missing trajectory_id column");
  }
  std::map<std::string, Trajectory> by_id;
  for (std::size_t i = 0; i < r.checkins.size(); ++i) {
    Trajectory& t = by_id[r.trajectory_ids[i]];
    if (t.id.empty()) {
      t.id = r.trajectory_ids[i];
      t.user_id = r.checkins[i].user_id;
    } else if (t.user_id != r.checkins[i].user_id) {
      throw InputError(path.string() + ": trajectory " + t.id + " mixes users");
    }
    t.checkins.push_back(std::move(r.checkins[i]));
  }
  std::vector<Trajectory> out;
  for (auto& [id, t] : by_id) {
    if (t.checkins.size() < 2) {
      throw InputError(path.string() + ": trajectory " + id + " has fewer than 2 check-ins");
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

void write_prepared(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  const std::vector<Trajectory>* splits[3] = {&d.train, &d.validation, &d.test};
  for (int s = 0; s < 3; ++s) {
    std::ofstream out(dir / kSplitFiles[s], std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + (dir / kSplitFiles[s]).string());
    write_trajectories_csv(out, *splits[s]);
  }
  std::ofstream m(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!m) throw InputError("cannot write " + (dir / "manifest.txt").string());
  auto count = [](const std::vector<Trajectory>& ts) {
    std::size_t n = 0;
    for (const auto& t : ts) n += t.checkins.size();
    return n;
  };
  m << "format_version=1\n";
  m << "train_trajectories=" << d.train.size() << '\n';
  m << "validation_trajectories=" << d.validation.size() << '\n';
  m << "test_trajectories=" << d.test.size() << '\n';
  m << "train_checkins=" << count(d.train) << '\n';
  m << "validation_checkins=" << count(d.validation) << '\n';
  m << "test_checkins=" << count(d.test) << '\n';
  m << "n_pois=" << d.pois.size() << '\n';
  m << "n_users=" << d.users.size() << '\n';
  m << "n_categories=" << d.categories.size() << '\n';
  for (std::size_t i = 0; i < d.users.size(); ++i) m << "user\t" << i << '\t' << d.users.id(i) << '\n';
  for (std::size_t i = 0; i < d.categories.size(); ++i)
    m << "category\t" << i << '\t' << d.categories.id(i) << '\n';
  for (std::size_t i = 0; i < d.pois.size(); ++i) {
    const PoiMeta& p = d.poi_meta[i];
    m << "poi\t" << i << '\t' << d.pois.id(i) << '\t' << format_double(p.lat) << '\t'
      << format_double(p.lon) << '\t' << p.category << '\t' << p.train_frequency << '\n';
  }
}

Dataset read_prepared(const std::filesystem::path& dir) {
  for (const char* f : kSplitFiles) {
    if (!std::filesystem::exists(dir / f)) {
      throw InputError("prepared dataset missing " + (dir / f).string());
    }
  }
  return assemble(read_split(dir / kSplitFiles[0]), read_split(dir / kSplitFiles[1]),
                  read_split(dir / kSplitFiles[2]));
}

}  // namespace getnext::data
