#include "getnext/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "getnext/core/error.hpp"
#include "getnext/data/io.hpp"

namespace getnext::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  throw InputError("config key '" + key + "': '" + value + "' is not " + want);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
    bad(key, v, "a non-negative integer");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
    bad(key, v, "a non-negative integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
    bad(key, v, "a finite number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

std::string real(double v) { return data::format_double(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

template <typename T>
Field size_field(std::string name, std::string help, T RunConfig::*outer, std::size_t T::*inner) {
  return {name, std::move(help), true,
          [=](RunConfig& c, const std::string& v) { (c.*outer).*inner = parse_size(name, v); },
          [=](const RunConfig& c) { return std::to_string((c.*outer).*inner); }};
}

Field model_size(std::string name, std::string help, std::size_t model::ModelConfig::*m) {
  return {name, std::move(help), true,
          [=](RunConfig& c, const std::string& v) { c.train.model.*m = parse_size(name, v); },
          [=](const RunConfig& c) { return std::to_string(c.train.model.*m); }};
}

Field model_real(std::string name, std::string help, double model::ModelConfig::*m) {
  return {name, std::move(help), true,
          [=](RunConfig& c, const std::string& v) { c.train.model.*m = parse_real(name, v); },
          [=](const RunConfig& c) { return real(c.train.model.*m); }};
}

Field model_bool(std::string name, std::string help, bool model::ModelConfig::*m) {
  return {name, std::move(help), true,
          [=](RunConfig& c, const std::string& v) { c.train.model.*m = parse_bool(name, v); },
          [=](const RunConfig& c) { return flag(c.train.model.*m); }};
}

Field path_field(std::string name, std::string help, std::string RunConfig::*m) {
  return {name, std::move(help), false,
          [=](RunConfig& c, const std::string& v) { c.*m = v; },
          [=](const RunConfig& c) { return c.*m; }};
}

std::vector<Field> make_fields() {
  using train::TrainConfig;
  std::vector<Field> f;
  f.push_back(size_field("epochs", "training epochs", &RunConfig::train, &TrainConfig::epochs));
  f.push_back(size_field("batch_size", "trajectories per optimizer step", &RunConfig::train,
                         &TrainConfig::batch_size));
  f.push_back({"lr", "Adam learning rate", true,
               [](RunConfig& c, const std::string& v) { c.train.lr = parse_real("lr", v); },
               [](const RunConfig& c) { return real(c.train.lr); }});
  f.push_back({"weight_decay", "L2 penalty added to gradients", true,
               [](RunConfig& c, const std::string& v) {
                 c.train.weight_decay = parse_real("weight_decay", v);
               },
               [](const RunConfig& c) { return real(c.train.weight_decay); }});
  f.push_back({"seed", "random seed", false,
               [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64("seed", v); },
               [](const RunConfig& c) { return std::to_string(c.train.seed); }});
  f.push_back({"eval_last_only", "evaluate only the last position of each trajectory", true,
               [](RunConfig& c, const std::string& v) {
                 c.train.eval_last_only = parse_bool("eval_last_only", v);
               },
               [](const RunConfig& c) { return flag(c.train.eval_last_only); }});
  f.push_back(model_size("poi_dim", "POI and user embedding width", &model::ModelConfig::poi_dim));
  f.push_back(model_size("time_dim", "time and category embedding width",
                         &model::ModelConfig::time_dim));
  f.push_back({"gcn_channels", "comma-separated GCN hidden widths", true,
               [](RunConfig& c, const std::string& v) {
                 std::vector<std::size_t> w;
                 for (const auto& s : split_list(v)) w.push_back(parse_size("gcn_channels", s));
                 if (w.empty()) bad("gcn_channels", v, "a non-empty list");
                 c.train.model.gcn_hidden = w;
               },
               [](const RunConfig& c) {
                 std::vector<std::string> s;
                 for (auto w : c.train.model.gcn_hidden) s.push_back(std::to_string(w));
                 return join(s);
               }});
  f.push_back(model_size("tam_hidden", "transition attention width", &model::ModelConfig::tam_hidden));
  f.push_back(model_size("encoder_layers", "encoder layers", &model::ModelConfig::encoder_layers));
  f.push_back(model_size("heads", "attention heads", &model::ModelConfig::heads));
  f.push_back(model_size("ff_dim", "feed-forward width", &model::ModelConfig::ff_dim));
  f.push_back(model_size("max_len", "longest accepted input sequence", &model::ModelConfig::max_len));
  f.push_back(model_real("dropout", "dropout rate", &model::ModelConfig::dropout));
  f.push_back(model_real("time_loss_weight", "weight of the time loss",
                         &model::ModelConfig::time_loss_weight));
  f.push_back(model_bool("causal_mask", "mask attention to earlier positions",
                         &model::ModelConfig::causal_mask));
  f.push_back(model_bool("scaled_attention", "divide attention scores by sqrt(head width)",
                         &model::ModelConfig::scaled_attention));
  f.push_back(model_bool("phi_in_loss", "add transition rows to training logits",
                         &model::ModelConfig::phi_in_loss));
  f.push_back({"ablation", "comma-separated ablations, or none", true,
               [](RunConfig& c, const std::string& v) {
                 model::Ablation a;
                 for (const auto& s : split_list(v)) model::set_ablation(a, s);
                 c.train.model.ablation = a;
               },
               [](const RunConfig& c) {
                 const auto names = model::ablation_names(c.train.model.ablation);
                 return names.empty() ? std::string("none") : join(names);
               }});
  f.push_back(size_field("min_poi_checkins", "drop POIs with fewer check-ins", &RunConfig::prep,
                         &data::PreprocessOptions::min_poi_checkins));
  f.push_back(size_field("min_user_checkins", "drop users with fewer check-ins", &RunConfig::prep,
                         &data::PreprocessOptions::min_user_checkins));
  f.push_back({"window_hours", "gap that splits trajectories", true,
               [](RunConfig& c, const std::string& v) {
                 c.prep.window_hours = parse_real("window_hours", v);
               },
               [](const RunConfig& c) { return real(c.prep.window_hours); }});
  f.push_back({"train_fraction", "share of check-ins in train", true,
               [](RunConfig& c, const std::string& v) {
                 c.prep.train_fraction = parse_real("train_fraction", v);
               },
               [](const RunConfig& c) { return real(c.prep.train_fraction); }});
  f.push_back({"validation_fraction", "share of check-ins in validation", true,
               [](RunConfig& c, const std::string& v) {
                 c.prep.validation_fraction = parse_real("validation_fraction", v);
               },
               [](const RunConfig& c) { return real(c.prep.validation_fraction); }});
  f.push_back({"split_scope", "global or per_user", true,
               [](RunConfig& c, const std::string& v) {
                 if (v == "global") c.prep.scope = data::SplitScope::global;
                 else if (v == "per_user") c.prep.scope = data::SplitScope::per_user;
                 else bad("split_scope", v, "global or per_user");
               },
               [](const RunConfig& c) {
                 return std::string(c.prep.scope == data::SplitScope::global ? "global" : "per_user");
               }});
  f.push_back({"split_straddle", "first or last: which check-in places a straddling trajectory",
               true,
               [](RunConfig& c, const std::string& v) {
                 if (v == "first") c.prep.straddle = data::StraddleRule::first_checkin;
                 else if (v == "last") c.prep.straddle = data::StraddleRule::last_checkin;
                 else bad("split_straddle", v, "first or last");
               },
               [](const RunConfig& c) {
                 return std::string(c.prep.straddle == data::StraddleRule::first_checkin ? "first"
                                                                                         : "last");
               }});
  f.push_back({"filter_mode", "fixed_point or single_pass", true,
               [](RunConfig& c, const std::string& v) {
                 if (v == "fixed_point") c.prep.filter = data::FilterMode::fixed_point;
                 else if (v == "single_pass") c.prep.filter = data::FilterMode::single_pass;
                 else bad("filter_mode", v, "fixed_point or single_pass");
               },
               [](const RunConfig& c) {
                 return std::string(c.prep.filter == data::FilterMode::fixed_point ? "fixed_point"
                                                                                   : "single_pass");
               }});
  f.push_back({"format", "canonical or foursquare", true,
               [](RunConfig& c, const std::string& v) {
                 data::parse_format(v);
                 c.format = v;
               },
               [](const RunConfig& c) { return c.format; }});
  f.push_back(path_field("input", "raw check-in file", &RunConfig::input));
  f.push_back(path_field("data", "prepared dataset directory", &RunConfig::data_dir));
  f.push_back(path_field("out", "output directory", &RunConfig::out_dir));
  return f;
}

}  // namespace

const std::vector<Field>& fields() {
  static const std::vector<Field> f = make_fields();
  return f;
}

void set(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.name == key) {
      f.set(c, trim(value));
      return;
    }
  throw InputError("unknown config key '" + key + "'");
}

void load_text(RunConfig& c, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError(source + ":" + std::to_string(n) + ": expected key = value");
    try {
      set(c, trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(source + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

void load_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  load_text(c, ss.str(), path.string());
}

void load_env(RunConfig& c, const std::function<const char*(const char*)>& lookup) {
  for (const auto& f : fields()) {
    std::string var = "GETNEXT_" + f.name;
    std::transform(var.begin(), var.end(), var.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (const char* v = lookup(var.c_str())) {
      try {
        f.set(c, trim(v));
      } catch (const InputError& e) {
        throw InputError(var + ": " + e.what());
      }
    }
  }
}

std::string serialize(const RunConfig& c) {
  std::string out;
  for (const auto& f : fields()) out += f.name + " = " + f.get(c) + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& f : fields()) {
    if (!f.hashed) continue;
    for (unsigned char ch : f.name + "=" + f.get(c) + "\n") {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string run_dir_name(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  return std::string("run-") + buf + "-seed" + std::to_string(c.train.seed);
}

}  // namespace getnext::cli
