#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "umre/config.hpp"
#include "umre/errors.hpp"
#include "umre/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  bool seed_set = false;
};

umre::Config load_with_overrides(const CommonArgs& args) {
  umre::Config cfg = umre::Config::load(args.config_path);
  if (args.seed_set) cfg.set("run", "seed", std::to_string(args.seed));
  if (!args.out_dir.empty()) cfg.set("run", "out_dir", args.out_dir);
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "config file (sectioned key=value)")
      ->required();
  cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--out", args.out_dir, "output directory override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UMRE ensemble-ranking pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  CLI::App* train = app.add_subcommand("train", "train the ensemble model");
  CLI::App* eval = app.add_subcommand("eval", "evaluate model and baselines on the test split");
  CLI::App* dump =
      app.add_subcommand("dump-transform", "dump learned transform curves as CSV");
  CLI::App* trace = app.add_subcommand("pareto-trace", "re-emit the weight trace from a log");
  for (CLI::App* cmd : {synth, train, eval, dump, trace}) add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const umre::Config cfg = load_with_overrides(args);
    if (synth->parsed())
      umre::run_synth(cfg, std::cout);
    else if (train->parsed())
      umre::run_train(cfg, std::cout);
    else if (eval->parsed())
      umre::run_eval(cfg, std::cout);
    else if (dump->parsed())
      umre::run_dump_transform(cfg, std::cout);
    else if (trace->parsed())
      umre::run_pareto_trace(cfg, std::cout);
    return 0;
  } catch (const umre::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const umre::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
