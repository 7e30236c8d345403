#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "umre/baselines.hpp"
#include "umre/config.hpp"
#include "umre/dataset.hpp"
#include "umre/metrics.hpp"
#include "umre/model.hpp"
#include "umre/trainer.hpp"

namespace umre {

// Everything resolved from one config file. Relative data paths land in
// the output directory so a config + seed pins the whole run.
struct PipelineContext {
  Config cfg;
  uint64_t seed = 0;
  std::string out_dir;
  std::string data_path;
  std::vector<std::string> task_names;  // may be empty until data is seen

  static PipelineContext resolve(const Config& cfg);
  std::string out_path(const std::string& name) const;
};

SyntheticConfig synth_config(const PipelineContext& ctx);

struct LoadedData {
  std::vector<RawInteraction> records;
  SplitResult splits;
  int num_tasks = 0;
};
LoadedData load_and_split(const PipelineContext& ctx);

ModelConfig model_config(const PipelineContext& ctx, std::span<const RawInteraction> records);
TrainSettings train_settings(const PipelineContext& ctx);
BaselineTrainConfig baseline_config(const PipelineContext& ctx);

void run_synth(const Config& cfg, std::ostream& out);
void run_train(const Config& cfg, std::ostream& out);
void run_eval(const Config& cfg, std::ostream& out);
void run_dump_transform(const Config& cfg, std::ostream& out);
void run_pareto_trace(const Config& cfg, std::ostream& out);

}  // namespace umre
