#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "getnext/data/dataset.hpp"

namespace getnext::data {

enum class Format { canonical_csv, foursquare_tsv };

Format parse_format(const std::string& name);

struct RowError {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::string message;
};

struct IngestResult {
  std::vector<CheckIn> checkins;  // sorted by (user_id, timestamp)
  std::vector<RowError> errors;
  std::size_t rows_read = 0;
  // Present only when the source carries a trajectory_id column; aligned
  // with `checkins`.
  std::vector<std::string> trajectory_ids;
};

// Reads a check-in log. Malformed rows are reported in `errors`; more than
// half the rows malformed, or an unreadable file, throws InputError.
IngestResult ingest(const std::filesystem::path& path, Format format);
IngestResult ingest(std::istream& in, Format format, const std::string& source = "<stream>");

// Parses "EEE MMM dd HH:mm:ss Z yyyy", e.g. "Tue Apr 03 18:00:09 +0000 2012",
// into UTC seconds.
std::int64_t parse_foursquare_time(const std::string& text);

// Splits RFC 4180 records. Exposed for tests.
std::vector<std::vector<std::string>> parse_csv(std::istream& in,
                                                std::vector<std::size_t>* record_lines = nullptr);

// Canonical CSV: user_id,poi_id,category_id,lat,lon,timestamp_utc. A
// tz_offset_min column is appended only when some check-in carries a nonzero
// offset, and a trajectory_id column when trajectory ids are given.
void write_canonical_csv(std::ostream& out, const std::vector<CheckIn>& checkins);
void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& trajectories);

// Prepared dataset directory: train.csv, validation.csv, test.csv and
// manifest.txt.
void write_prepared(const std::filesystem::path& dir, const Dataset& d);
Dataset read_prepared(const std::filesystem::path& dir);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace getnext::data
