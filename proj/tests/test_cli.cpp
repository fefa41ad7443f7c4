#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "getnext/cli/commands.hpp"
#include "getnext/cli/config.hpp"
#include "getnext/core/checkpoint.hpp"
#include "getnext/core/error.hpp"
#include "getnext/data/io.hpp"
#include "support/toy.hpp"

using namespace getnext;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

struct Sandbox {
  fs::path root;
  std::map<std::string, std::string> env;

  Sandbox() {
    static int counter = 0;
    root = fs::temp_directory_path() /
           ("getnext_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }

  std::string path(const std::string& rel) const { return (root / rel).string(); }

  Result run(std::vector<std::string> args) const {
    args.insert(args.begin(), "getnext");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err,
                              [this](const char* name) -> const char* {
                                const auto it = env.find(name);
                                return it == env.end() ? nullptr : it->second.c_str();
                              });
    return {code, out.str(), err.str()};
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kSmall = {"--poi_dim",      "16",    "--time_dim",   "4",
                                         "--ff_dim",       "32",    "--gcn_channels", "16,16",
                                         "--tam_hidden",   "16",    "--lr",         "0.01"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

void prepare_cycle(const Sandbox& s) {
  REQUIRE(s.run({"synth", "--pattern", "cycle", "--users", "1", "--pois", "8", "--out",
                 s.path("raw.csv")}).code == 0);
  REQUIRE(s.run({"prepare", "--input", s.path("raw.csv"), "--out", s.path("prep")}).code == 0);
}

fs::path only_run_dir(const fs::path& runs) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(runs)) dirs.push_back(e.path());
  REQUIRE(dirs.size() == 1);
  return dirs[0];
}

}  // namespace

TEST_CASE("prepare writes splits and a manifest, reproducibly") {
  Sandbox s;
  prepare_cycle(s);
  for (const char* f : {"train.csv", "validation.csv", "test.csv", "manifest.txt"})
    CHECK(fs::exists(s.root / "prep" / f));
  const std::string first = slurp(s.root / "prep" / "train.csv") + slurp(s.root / "prep" / "manifest.txt");
  REQUIRE(s.run({"prepare", "--input", s.path("raw.csv"), "--out", s.path("prep")}).code == 0);
  CHECK(first == slurp(s.root / "prep" / "train.csv") + slurp(s.root / "prep" / "manifest.txt"));

  const auto missing = s.run({"prepare", "--input", s.path("absent.csv"), "--out", s.path("x")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("absent.csv") != std::string::npos);
}

TEST_CASE("map and stats on a triangle") {
  Sandbox s;
  {
    std::ofstream raw(s.path("tri.csv"));
    raw << "user_id,poi_id,category_id,lat,lon,timestamp_utc\n"
           "u,A,c,40,-74,1333238400\nu,B,c,40.1,-74,1333239000\n"
           "u,C,c,40.2,-74,1333239600\nu,A,c,40,-74,1333240200\n";
  }
  REQUIRE(s.run({"prepare", "--input", s.path("tri.csv"), "--out", s.path("prep"),
                 "--min_poi_checkins", "1", "--min_user_checkins", "1"}).code == 0);
  const auto r = s.run({"build-map", "--data", s.path("prep"), "--out", s.path("map")});
  REQUIRE(r.code == 0);
  CHECK(r.out == "n_nodes=3\nn_edges=3\nmean_in_degree=1\nmean_out_degree=1\nmean_edge_weight=1\n"
                 "avg_clustering_coefficient=1\n");
  CHECK(slurp(s.root / "map" / "edges.csv") == "src,dst,weight\nA,B,1\nB,C,1\nC,A,1\n");
  const auto st = s.run({"stats", "--data", s.path("prep"), "--category", "c"});
  CHECK(st.code == 0);
  CHECK(st.out.find("avg_clustering_coefficient=1\n") != std::string::npos);
  CHECK(st.out.find("hour,checkins_per_day\n0,4\n1,0\n") != std::string::npos);
  CHECK(s.run({"stats", "--data", s.path("prep"), "--category", "zzz"}).code == 2);
}

TEST_CASE("empty train split is a user error") {
  Sandbox s;
  auto d = testing::toy_dataset();
  data::write_prepared(s.root / "prep", data::assemble({}, {}, d.test));
  CHECK(s.run({"build-map", "--data", s.path("prep"), "--out", s.path("map")}).code == 2);
  CHECK(s.run({"build-map", "--data", s.path("nowhere"), "--out", s.path("map")}).code == 2);
}

TEST_CASE("train, evaluate and recommend on the cycle corpus") {
  Sandbox s;
  prepare_cycle(s);
  const auto t = s.run(with_small({"train", "--data", s.path("prep"), "--out", s.path("runs"),
                                   "--epochs", "40"}));
  REQUIRE(t.code == 0);
  const fs::path run = only_run_dir(s.root / "runs");
  CHECK(run.filename().string().rfind("run-", 0) == 0);
  CHECK(run.filename().string().ends_with("-seed42"));
  const std::string ck = (run / "checkpoint.bin").string();
  CHECK(slurp(run / "log.csv").rfind("epoch,train_loss,val_acc1,val_mrr\n1,", 0) == 0);

  const auto e = s.run({"evaluate", "--checkpoint", ck, "--split", "train"});
  CHECK(e.code == 0);
  CHECK(e.out.find("all.acc@1=1\n") != std::string::npos);
  CHECK(fs::exists(run / "report_train.csv"));
  const auto ec = s.run({"evaluate", "--checkpoint", ck, "--cohorts"});
  CHECK(ec.code == 0);
  CHECK(ec.out.find("user_inactive.count=") != std::string::npos);

  const auto r = s.run({"recommend", "--checkpoint", ck, "--user", "u0000", "--prefix",
                        "p00000,p00001", "--top_k", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("p00002,", 0) == 0);
  CHECK(s.run({"recommend", "--checkpoint", ck, "--user", "nobody", "--prefix", "p00000"}).code == 2);
  CHECK(s.run({"recommend", "--checkpoint", ck, "--user", "u0000", "--prefix", "zzz"}).code == 2);

  CHECK(s.run({"evaluate", "--data", s.path("prep")}).code == 2);
  CHECK(s.run({"evaluate", "--checkpoint", s.path("none.bin")}).code == 2);
}

TEST_CASE("no_graph ablation checkpoints carry no graph parameters") {
  Sandbox s;
  prepare_cycle(s);
  REQUIRE(s.run(with_small({"train", "--data", s.path("prep"), "--out", s.path("runs"),
                            "--epochs", "1", "--ablation", "no_graph"})).code == 0);
  const auto blobs = core::read_checkpoint(only_run_dir(s.root / "runs") / "checkpoint.bin");
  bool table = false;
  for (const auto& b : blobs) {
    CHECK(b.name.rfind("gcn_", 0) != 0);
    CHECK(b.name.rfind("tam_", 0) != 0);
    table = table || b.name == "poi_emb";
  }
  CHECK(table);
  CHECK(s.run({"train", "--data", s.path("prep"), "--out", s.path("r2"), "--ablation", "bogus"})
            .code == 2);
}

TEST_CASE("config precedence is flag over environment over file over default") {
  Sandbox s;
  prepare_cycle(s);
  {
    std::ofstream cfg(s.path("run.conf"));
    cfg << "# small run\nepochs = 3\nlr = 0.02\n" << "poi_dim = 8\ntime_dim = 4\nff_dim = 16\n"
        << "gcn_channels = 8\ntam_hidden = 8\n";
  }
  auto epochs_used = [&](Sandbox& sb, std::vector<std::string> extra) {
    fs::remove_all(sb.root / "runs");
    std::vector<std::string> args = {"train", "--data", sb.path("prep"), "--out", sb.path("runs"),
                                     "--config", sb.path("run.conf")};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(sb.run(args).code == 0);
    const std::string cfg = slurp(only_run_dir(sb.root / "runs") / "config.txt");
    CHECK(cfg.find("lr = 0.02\n") != std::string::npos);
    const auto at = cfg.find("epochs = ");
    return cfg.substr(at + 9, cfg.find('\n', at) - at - 9);
  };
  CHECK(epochs_used(s, {}) == "3");
  s.env["GETNEXT_EPOCHS"] = "2";
  CHECK(epochs_used(s, {}) == "2");
  CHECK(epochs_used(s, {"--epochs", "1"}) == "1");
  s.env["GETNEXT_EPOCHS"] = "two";
  CHECK(s.run({"train", "--data", s.path("prep"), "--out", s.path("runs")}).code == 2);
  s.env.clear();

  {
    std::ofstream cfg(s.path("bad.conf"));
    cfg << "epochs = 3\nlearning_rate = 0.1\n";
  }
  const auto bad = s.run({"train", "--data", s.path("prep"), "--out", s.path("runs"), "--config",
                          s.path("bad.conf")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("learning_rate") != std::string::npos);
  CHECK(s.run({"train", "--bogus", "1"}).code == 2);
  CHECK(s.run({}).code == 2);
  CHECK(s.run({"--help"}).code == 0);
}

TEST_CASE("config round trip and run identity") {
  cli::RunConfig a;
  cli::set(a, "epochs", "7");
  cli::set(a, "ablation", "no_time_cat,single_decoder");
  cli::RunConfig b;
  cli::load_text(b, cli::serialize(a), "mem");
  CHECK(cli::serialize(a) == cli::serialize(b));
  CHECK(cli::config_hash(a) == cli::config_hash(b));
  cli::set(b, "seed", "9");
  cli::set(b, "data", "/elsewhere");
  CHECK(cli::config_hash(a) == cli::config_hash(b));
  CHECK(cli::run_dir_name(a) != cli::run_dir_name(b));
  cli::set(b, "lr", "0.5");
  CHECK(cli::config_hash(a) != cli::config_hash(b));
  CHECK_THROWS_AS(cli::set(a, "heads", "-1"), InputError);
  CHECK_THROWS_AS(cli::set(a, "nope", "1"), InputError);
  CHECK_THROWS_AS(cli::load_text(a, "epochs 3\n", "mem"), InputError);

  cli::RunConfig defaults;
  CHECK(defaults.train.epochs == 200);
  CHECK(defaults.train.batch_size == 20);
  CHECK(defaults.train.lr == 1e-3);
  CHECK(defaults.train.weight_decay == 5e-4);
  CHECK(defaults.train.model.poi_dim == 128);
  CHECK(defaults.train.model.time_dim == 32);
  CHECK(defaults.train.model.heads == 2);
  CHECK(defaults.train.model.encoder_layers == 2);
  CHECK(defaults.train.model.ff_dim == 1024);
  CHECK(defaults.train.model.dropout == 0.3);
  CHECK(defaults.train.model.time_loss_weight == 10.0);
}

TEST_CASE("training twice gives identical artifacts") {
  Sandbox s;
  prepare_cycle(s);
  auto once = [&] {
    fs::remove_all(s.root / "runs");
    REQUIRE(s.run(with_small({"train", "--data", s.path("prep"), "--out", s.path("runs"),
                              "--epochs", "3"})).code == 0);
    const fs::path run = only_run_dir(s.root / "runs");
    return std::make_pair(run.filename().string(),
                          slurp(run / "checkpoint.bin") + slurp(run / "log.csv"));
  };
  const auto a = once(), b = once();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}
