#pragma once

#include <vector>

#include "umre/dataset.hpp"
#include "umre/model.hpp"
#include "umre/nn.hpp"
#include "umre/pareto.hpp"

namespace umre {

struct TrainSettings {
  int max_epochs = 30;  // E_max
  int batch_sessions = 16;
  AdamConfig adam;
  ParetoConfig pareto;
  bool pareto_enabled = true;  // false keeps the inverse-rate init fixed
  uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::vector<double> omega;  // weights used during this epoch
  std::vector<double> uauc;   // validation UAUC after this epoch
};

struct TrainResult {
  std::vector<EpochLog> trace;
  std::vector<double> final_omega;
  int epochs_run = 0;
  bool converged_early = false;
};

// Epoch loop of the reward-reweighting scheme: per batch, rewards are
// composed with the current omega and the squared-error ensemble loss is
// minimized; per epoch, validation UAUC drives the weight update after
// warm-up. Stops once the post-warm-up weight movement drops under eps.
TrainResult train_model(UmreModel& model, const std::vector<Session>& train,
                        const std::vector<Session>& valid, const TrainSettings& settings);

// Validation UAUC per task from fused scores; tasks with no qualifying
// user fall back to the supplied previous value.
std::vector<double> validation_uauc(const UmreModel& model, const std::vector<Session>& valid,
                                    const std::vector<double>& fallback);

}  // namespace umre
