#pragma once

// Flat key = value run configuration shared by the command-line tools.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "getnext/data/dataset.hpp"
#include "getnext/train/train.hpp"

namespace getnext::cli {

struct RunConfig {
  train::TrainConfig train;
  data::PreprocessOptions prep;
  std::string format = "canonical";
  std::string input;     // raw check-in log
  std::string data_dir;  // prepared dataset directory
  std::string out_dir;
};

struct Field {
  std::string name;
  std::string help;
  bool hashed;  // part of the run identity
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Every accepted key, in serialization order.
const std::vector<Field>& fields();

// Throws InputError for an unknown key or an unparsable value.
void set(RunConfig& c, const std::string& key, const std::string& value);

// Lines of `key = value`; blank lines and lines starting with '#' are skipped.
void load_file(RunConfig& c, const std::filesystem::path& path);
void load_text(RunConfig& c, const std::string& text, const std::string& source);

// Applies GETNEXT_<KEY> (upper-cased) for every key that lookup() finds.
void load_env(RunConfig& c, const std::function<const char*(const char*)>& lookup);

// All keys as key = value lines.
std::string serialize(const RunConfig& c);

// FNV-1a over the hashed keys (everything except seed and paths).
std::uint64_t config_hash(const RunConfig& c);
// run-<16 hex digits>-seed<seed>
std::string run_dir_name(const RunConfig& c);

}  // namespace getnext::cli
