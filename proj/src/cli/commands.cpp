#include "getnext/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "getnext/cli/config.hpp"
#include "getnext/core/checkpoint.hpp"
#include "getnext/core/error.hpp"
#include "getnext/data/io.hpp"
#include "getnext/graph/flow_map.hpp"
#include "getnext/model/model.hpp"
#include "getnext/train/evaluate.hpp"
#include "getnext/train/train.hpp"

namespace getnext::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigFile = "config.txt";
constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kLogFile = "log.csv";

// Config flags registered on a subcommand; applied after file and env.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* sub) {
    sub->add_option("--config", file, "key = value config file");
    for (const auto& f : fields())
      options[f.name] = sub->add_option("--" + f.name, values[f.name], f.help);
  }

  RunConfig resolve(const EnvLookup& env) const {
    RunConfig c;
    if (!file.empty()) load_file(c, file);
    load_env(c, env);
    for (const auto& [name, opt] : options)
      if (opt->count() > 0) set(c, name, values.at(name));
    return c;
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write " + p.string());
  return f;
}

void write_text(const fs::path& p, const std::string& text) {
  auto f = open_out(p);
  f << text;
}

data::Dataset load_dataset(const std::string& dir) {
  if (dir.empty()) throw InputError("no prepared dataset given (--data)");
  if (!fs::is_directory(dir)) throw InputError("dataset directory not found: " + dir);
  return data::read_prepared(dir);
}

struct Loaded {
  RunConfig config;
  data::Dataset dataset;
  std::unique_ptr<model::Model> model;
};

// Rebuilds the model saved next to `checkpoint`. `data_override` replaces the
// dataset path recorded at training time when non-empty.
Loaded load_run(const std::string& checkpoint, const std::string& data_override) {
  if (checkpoint.empty()) throw InputError("no checkpoint given (--checkpoint)");
  if (!fs::is_regular_file(checkpoint)) throw InputError("checkpoint not found: " + checkpoint);
  const fs::path cfg = fs::path(checkpoint).parent_path() / kConfigFile;
  if (!fs::is_regular_file(cfg))
    throw InputError("run config not found next to the checkpoint: " + cfg.string());
  Loaded l;
  load_file(l.config, cfg);
  if (!data_override.empty()) l.config.data_dir = data_override;
  l.dataset = load_dataset(l.config.data_dir);
  const auto map = graph::build(l.dataset);
  l.model = std::make_unique<model::Model>(l.config.train.model, map, l.dataset.users.size(),
                                           l.dataset.categories.size(), l.config.train.seed);
  core::restore(l.model->params(), core::read_checkpoint(checkpoint));
  return l;
}

int cmd_prepare(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw InputError("no input file given (--input)");
  if (c.out_dir.empty()) throw InputError("no output directory given (--out)");
  if (!fs::exists(c.input)) throw InputError("input file not found: " + c.input);
  const auto ingested = data::ingest(c.input, data::parse_format(c.format));
  const auto d = data::preprocess(ingested.checkins, c.prep);
  fs::create_directories(c.out_dir);
  data::write_prepared(c.out_dir, d);
  out << "rows_read=" << ingested.rows_read << "\nrows_rejected=" << ingested.errors.size()
      << "\ntrain_trajectories=" << d.train.size()
      << "\nvalidation_trajectories=" << d.validation.size()
      << "\ntest_trajectories=" << d.test.size() << "\npois=" << d.pois.size()
      << "\nusers=" << d.users.size() << "\ncategories=" << d.categories.size() << '\n';
  return kOk;
}

int cmd_build_map(const std::string& data_dir, const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw InputError("no output directory given (--out)");
  const auto d = load_dataset(data_dir);
  const auto map = graph::build(d);
  fs::create_directories(out_dir);
  {
    auto f = open_out(fs::path(out_dir) / "edges.csv");
    graph::write_edge_list(f, map);
  }
  std::ostringstream stats;
  graph::write_stats(stats, graph::stats(map));
  write_text(fs::path(out_dir) / "stats.txt", stats.str());
  out << stats.str();
  return kOk;
}

int cmd_stats(const std::string& data_dir, const std::string& category, std::ostream& out) {
  const auto d = load_dataset(data_dir);
  std::size_t checkins = 0;
  for (const auto* split : {&d.train, &d.validation, &d.test})
    for (const auto& t : *split) checkins += t.checkins.size();
  out << "users=" << d.users.size() << "\npois=" << d.pois.size()
      << "\ncategories=" << d.categories.size() << "\ncheckins=" << checkins
      << "\ntrajectories=" << d.train.size() + d.validation.size() + d.test.size() << '\n';
  graph::write_stats(out, graph::stats(graph::build(d)));
  if (!category.empty()) {
    const auto h = graph::category_hour_histogram(d.train, d.categories, category);
    out << "hour,checkins_per_day\n";
    for (std::size_t i = 0; i < h.size(); ++i) out << i << ',' << data::format_double(h[i]) << '\n';
  }
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  if (c.out_dir.empty()) throw InputError("no output directory given (--out)");
  const auto d = load_dataset(c.data_dir);
  const auto map = graph::build(d);
  train::validate(c.train);
  model::Model m(c.train.model, map, d.users.size(), d.categories.size(), c.train.seed);
  const fs::path run = fs::path(c.out_dir) / run_dir_name(c);
  fs::create_directories(run);
  write_text(run / kConfigFile, serialize(c));
  auto log = open_out(run / kLogFile);
  train::write_log_header(log);
  const auto res = train::train(m, d, c.train, [&](const train::EpochRecord& r) {
    train::write_log_row(log, r);
    log.flush();
  });
  core::write_checkpoint(run / kCheckpointFile, res.best);
  out << "run_dir=" << run.string() << "\nbest_epoch=" << res.best_epoch
      << "\nparameters=" << m.params().scalar_count() << '\n';
  return kOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_override,
                 const std::string& split, bool cohorts, bool last_only, const std::string& out_dir,
                 std::ostream& out) {
  Loaded l = load_run(checkpoint, data_override);
  train::EvalOptions o;
  o.last_only = last_only || l.config.train.eval_last_only;
  train::EvalReport r;
  if (cohorts) {
    if (split != "test") throw InputError("cohort reports are defined on the test split");
    r = train::cohort_evaluate(*l.model, l.dataset, o);
  } else {
    const std::vector<data::Trajectory>* s = split == "test"         ? &l.dataset.test
                                             : split == "validation" ? &l.dataset.validation
                                             : split == "train"      ? &l.dataset.train
                                                                     : nullptr;
    if (!s) throw InputError("unknown split '" + split + "'");
    r = train::evaluate(*l.model, l.dataset, *s, o);
  }
  std::ostringstream text, csv;
  train::write_report_text(text, r);
  train::write_report_csv(csv, r);
  const fs::path dir = out_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(out_dir);
  fs::create_directories(dir);
  write_text(dir / ("report_" + split + ".txt"), text.str());
  write_text(dir / ("report_" + split + ".csv"), csv.str());
  out << text.str();
  return kOk;
}

int cmd_recommend(const std::string& checkpoint, const std::string& data_override,
                  const std::string& user, const std::vector<std::string>& prefix,
                  const std::vector<std::int64_t>& times, std::size_t top_k, std::ostream& out) {
  Loaded l = load_run(checkpoint, data_override);
  if (prefix.empty()) throw InputError("empty prefix");
  if (!times.empty() && times.size() != prefix.size())
    throw InputError("--times needs one timestamp per prefix check-in");
  if (!l.dataset.user_seen(user)) throw InputError("unknown user '" + user + "'");
  model::Sample s;
  s.trajectory_id = "query";
  s.user = *l.dataset.users.find(user);
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const auto p = l.dataset.pois.find(prefix[i]);
    if (!p) throw InputError("unknown POI '" + prefix[i] + "'");
    data::CheckIn q;
    q.timestamp = times.empty() ? 12 * 3600 : times[i];
    s.poi.push_back(*p);
    s.cat.push_back(l.dataset.poi_meta[*p].category);
    s.slot.push_back(model::slot_time(q));
    s.day_time.push_back(model::day_fraction(q));
  }
  if (s.length() > l.model->config().max_len) throw InputError("prefix longer than max_len");
  const auto frozen = l.model->freeze();
  const auto scores = l.model->score_next(frozen, s);
  for (std::size_t idx : model::recommend(scores, {}, top_k))
    out << l.dataset.pois.id(idx) << ',' << data::format_double(scores[idx]) << '\n';
  return kOk;
}

int cmd_synth(const data::SynthOptions& o, const std::string& path, std::ostream& out) {
  const auto checkins = data::synthesize(o);
  if (path.empty()) {
    data::write_canonical_csv(out, checkins);
  } else {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    auto f = open_out(path);
    data::write_canonical_csv(f, checkins);
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const EnvLookup& env) {
  CLI::App app{"Next-POI recommendation from trajectory flow maps", "getnext"};
  app.require_subcommand(1);

  auto* prepare = app.add_subcommand("prepare", "ingest, filter and split a check-in log");
  ConfigFlags prepare_cfg;
  prepare_cfg.attach(prepare);

  auto* synth = app.add_subcommand("synth", "write a synthetic check-in log");
  data::SynthOptions so;
  std::string synth_pattern = "uniform", synth_out;
  synth->add_option("--pattern", synth_pattern, "cycle, planted_shared_paths or uniform");
  synth->add_option("--users", so.n_users, "number of users");
  synth->add_option("--pois", so.n_pois, "number of POIs");
  synth->add_option("--categories", so.n_categories, "number of categories");
  synth->add_option("--checkins_per_user", so.checkins_per_user, "check-ins per user");
  synth->add_option("--seed", so.seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV (stdout when omitted)");

  std::string data_dir, out_dir, category;
  auto* build_map = app.add_subcommand("build-map", "write the flow map edge list and stats");
  build_map->add_option("--data", data_dir, "prepared dataset directory")->required();
  build_map->add_option("--out", out_dir, "output directory")->required();

  auto* stats = app.add_subcommand("stats", "print dataset and flow map statistics");
  stats->add_option("--data", data_dir, "prepared dataset directory")->required();
  stats->add_option("--category", category, "also print this category's hourly histogram");

  auto* train_cmd = app.add_subcommand("train", "train a model into a new run directory");
  ConfigFlags train_cfg;
  train_cfg.attach(train_cmd);

  std::string checkpoint, split = "test";
  bool cohorts = false, last_only = false;
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a split");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint.bin inside a run directory");
  evaluate->add_option("--data", data_dir, "prepared dataset (defaults to the training one)");
  evaluate->add_option("--split", split, "test, validation or train");
  evaluate->add_flag("--cohorts", cohorts, "add user-activity and trajectory-length cohorts");
  evaluate->add_flag("--eval_last_only", last_only, "only the last position per trajectory");
  evaluate->add_option("--out", out_dir, "report directory (defaults to the run directory)");

  std::string user;
  std::vector<std::string> prefix;
  std::vector<std::int64_t> times;
  std::size_t top_k = 10;
  auto* rec = app.add_subcommand("recommend", "rank next POIs for a user and a prefix");
  rec->add_option("--checkpoint", checkpoint, "checkpoint.bin inside a run directory");
  rec->add_option("--data", data_dir, "prepared dataset (defaults to the training one)");
  rec->add_option("--user", user, "user id")->required();
  rec->add_option("--prefix", prefix, "comma-separated POI ids")->required()->delimiter(',');
  rec->add_option("--times", times, "comma-separated UTC timestamps")->delimiter(',');
  rec->add_option("--top_k", top_k, "number of POIs to list");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kUserError;
    }
    if (prepare->parsed()) return cmd_prepare(prepare_cfg.resolve(env), out);
    if (synth->parsed()) {
      so.pattern = data::parse_pattern(synth_pattern);
      return cmd_synth(so, synth_out, out);
    }
    if (build_map->parsed()) return cmd_build_map(data_dir, out_dir, out);
    if (stats->parsed()) return cmd_stats(data_dir, category, out);
    if (train_cmd->parsed()) return cmd_train(train_cfg.resolve(env), out);
    if (evaluate->parsed())
      return cmd_evaluate(checkpoint, data_dir, split, cohorts, last_only, out_dir, out);
    if (rec->parsed())
      return cmd_recommend(checkpoint, data_dir, user, prefix, times, top_k, out);
    err << "error: no subcommand\n";
    return kUserError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace getnext::cli
