#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "umre/errors.hpp"
#include "umre/pipeline.hpp"

using namespace umre;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string integration_config(const std::string& out_dir) {
  std::ostringstream cfg;
  cfg << "[run]\nseed = 0\nout_dir = " << out_dir << "\n"
      << "[data]\npath = synth.jsonl\ntask_names = click,like\nsplit = 0.7,0.15,0.15\n"
      << "[synth]\nusers = 40\nitems = 90\ncategories = 8\ntasks = 2\n"
      << "target_rates = 0.45,0.15\nsessions_per_user = 2\nsession_len = 21\nnoise = 0.05\n"
      << "[model]\nhist_emb_dim = 4\ngru_hidden = 6\nitem_ctx_dim = 4\numnn_hidden = 8\n"
      << "umnn_depth = 2\ntask_emb_dim = 4\nd_k = 4\nquad_nodes = 8\n"
      << "[train]\nepochs = 3\nbatch_sessions = 8\n"
      << "[pareto]\nwarmup = 1\n"
      << "[eval]\nbaselines = singlesort,lr\n"
      << "[dump]\ncontexts = 2\n";
  return cfg.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("synth, train, eval, dump, trace run end to end") {
  TempDir dir("umre_pipeline_it");
  const Config cfg = Config::from_string(integration_config(dir.file("out")));
  std::ostringstream sink;

  run_synth(cfg, sink);
  const std::string data_path = dir.file("out") + "/synth.jsonl";
  REQUIRE(fs::exists(data_path));
  const std::string first_bytes = read_file(data_path);
  run_synth(cfg, sink);
  CHECK(read_file(data_path) == first_bytes);  // regeneration is byte-identical

  run_train(cfg, sink);
  REQUIRE(fs::exists(dir.file("out") + "/checkpoint.json"));
  REQUIRE(fs::exists(dir.file("out") + "/train_log.json"));
  REQUIRE(fs::exists(dir.file("out") + "/pareto_trace.csv"));

  SUBCASE("trace csv has one row per epoch and task") {
    const nlohmann::json log =
        nlohmann::json::parse(read_file(dir.file("out") + "/train_log.json"));
    const int epochs_run = log.at("epochs_run").get<int>();
    CHECK(epochs_run >= 1);
    std::ifstream trace(dir.file("out") + "/pareto_trace.csv");
    std::string line;
    int rows = 0;
    std::getline(trace, line);
    CHECK(line == "epoch,task,omega,uauc");
    while (std::getline(trace, line))
      if (!line.empty()) ++rows;
    CHECK(rows == epochs_run * 2);
  }

  run_eval(cfg, sink);
  const nlohmann::json metrics = nlohmann::json::parse(read_file(dir.file("out") + "/metrics.json"));
  REQUIRE(metrics.contains("models"));
  const auto& models = metrics.at("models");
  for (const char* name : {"umre", "singlesort:click", "singlesort:like", "lr"})
    REQUIRE(models.contains(name));
  for (const auto& [name, report] : models.items()) {
    for (const char* task : {"click", "like"}) {
      for (const char* metric : {"hr@3", "ndcg@3", "uauc"}) {
        const double v = report.at(task).at(metric).get<double>();
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }

  SUBCASE("singlesort report matches a direct computation from pxtrs") {
    PipelineContext ctx = PipelineContext::resolve(cfg);
    const LoadedData data = load_and_split(ctx);
    std::vector<std::pair<long long, RankedSession>> ranked;
    for (const Session& s : data.splits.test)
      ranked.emplace_back(s.user_id, single_sort(s, 0));
    const MetricReport direct = evaluate_ranked(ranked, 2, 3);
    const auto& reported = models.at("singlesort:click");
    CHECK(reported.at("click").at("ndcg@3").get<double>() == direct.tasks[0].ndcg);
    CHECK(reported.at("like").at("hr@3").get<double>() == direct.tasks[1].hr);
    CHECK(reported.at("click").at("uauc").get<double>() == direct.tasks[0].uauc);
  }

  run_dump_transform(cfg, sink);
  SUBCASE("curve dump has 101 points per task and context") {
    std::ifstream csv(dir.file("out") + "/transform_curves.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "task,h_id,p,g_of_p");
    int rows = 0;
    while (std::getline(csv, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2 * 2 * 101);
  }

  SUBCASE("pareto-trace re-emits the csv written by train") {
    const std::string trained = read_file(dir.file("out") + "/pareto_trace.csv");
    std::ostringstream reemitted;
    run_pareto_trace(cfg, reemitted);
    CHECK(reemitted.str() == trained);
  }
}

TEST_CASE("synth+train+eval is deterministic end to end") {
  TempDir dir_a("umre_det_a"), dir_b("umre_det_b");
  std::ostringstream sink;
  for (const TempDir* d : {&dir_a, &dir_b}) {
    const Config cfg = Config::from_string(integration_config(d->file("out")));
    run_synth(cfg, sink);
    run_train(cfg, sink);
    run_eval(cfg, sink);
  }
  CHECK(read_file(dir_a.file("out") + "/metrics.json") ==
        read_file(dir_b.file("out") + "/metrics.json"));
  CHECK(read_file(dir_a.file("out") + "/checkpoint.json") ==
        read_file(dir_b.file("out") + "/checkpoint.json"));
}

TEST_CASE("config and data errors surface as typed exceptions") {
  std::ostringstream sink;
  SUBCASE("missing config file") {
    CHECK_THROWS_AS(Config::load("/nonexistent/umre.ini"), ConfigError);
  }
  SUBCASE("malformed config line") {
    CHECK_THROWS_AS(Config::from_string("[run\nseed = 0\n"), ConfigError);
    CHECK_THROWS_AS(Config::from_string("justakey\n"), ConfigError);
  }
  SUBCASE("eval without a dataset") {
    TempDir dir("umre_err_it");
    const Config cfg = Config::from_string(integration_config(dir.file("out")));
    CHECK_THROWS_AS(run_eval(cfg, sink), DataError);
  }
  SUBCASE("unknown baseline name") {
    TempDir dir("umre_err_bl");
    Config cfg = Config::from_string(integration_config(dir.file("out")));
    cfg.set("eval", "baselines", "nosuchmodel");
    run_synth(cfg, sink);
    run_train(cfg, sink);
    CHECK_THROWS_AS(run_eval(cfg, sink), ConfigError);
  }
  SUBCASE("quadrature resolution below the floor") {
    TempDir dir("umre_err_q");
    Config cfg = Config::from_string(integration_config(dir.file("out")));
    cfg.set("model", "quad_nodes", "4");
    run_synth(cfg, sink);
    CHECK_THROWS_AS(run_train(cfg, sink), std::invalid_argument);
  }
}

TEST_CASE("cli subprocess exit codes") {
  const char* cli = std::getenv("UMRE_CLI");
  if (!cli) {
    MESSAGE("UMRE_CLI not set; skipping subprocess checks");
    return;
  }
  TempDir dir("umre_cli_it");
  const std::string cfg_path = dir.file("it.ini");
  std::ofstream(cfg_path) << integration_config(dir.file("out"));

  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("synth --config " + cfg_path) == 0);
  CHECK(run("train --config " + cfg_path) == 0);
  CHECK(run("eval --config " + cfg_path) == 0);
  CHECK(run("dump-transform --config " + cfg_path) == 0);
  CHECK(run("pareto-trace --config " + cfg_path) == 0);
  CHECK(run("synth --config /nonexistent.ini") == 2);
  CHECK(run("synth") == 2);                    // missing required --config
  CHECK(run("nosuchcommand --config " + cfg_path) == 2);
  CHECK(run("--help") == 0);
}

}  // TEST_SUITE
