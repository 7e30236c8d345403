#pragma once

#include <span>
#include <vector>

#include "umre/dataset.hpp"
#include "umre/metrics.hpp"
#include "umre/nn.hpp"
#include "umre/umnn.hpp"

namespace umre {

// rank one session's items by the raw pxtr of a single task
RankedSession single_sort(const Session& session, int task);

struct LrParams {
  std::vector<double> w;
  double b = 0.0;
};

// sigmoid(w . p + b)
double lr_fuse(std::span<const double> pxtrs, const LrParams& params);

struct BaselineTrainConfig {
  int click_task = 0;
  int iterations = 400;  // full-batch steps for LR/MLP
  double lr = 0.05;
  uint64_t seed = 1;
  // LR+UMNN joint training
  int umnn_epochs = 6;
  int umnn_batch = 256;
  double umnn_lr = 5e-3;
  int umnn_hidden = 24;
  int umnn_depth = 3;
  int quad_nodes = 16;
};

LrParams train_lr(std::span<const RawInteraction> records, const BaselineTrainConfig& cfg);

struct MlpFuser {
  Mlp net;  // K -> 64 -> 64 -> 1, ReLU hidden
};

// sigmoid(net(p))
double mlp_fuse(std::span<const double> pxtrs, const MlpFuser& fuser);

MlpFuser train_mlp(std::span<const RawInteraction> records, const BaselineTrainConfig& cfg);

// handcrafted Table-style fusers, evaluation-only
struct FormulaParams {
  std::vector<double> w, alpha, b, beta;
};

// s = sum_k w_k (alpha_k p_k + b_k)^beta_k
double formula_additive(std::span<const double> pxtrs, const FormulaParams& params);

// s = prod_k ((alpha_k p_k + b_k)^beta_k)^w_k, evaluated in the log domain
double formula_multiplicative(std::span<const double> pxtrs, const FormulaParams& params);

// LR over per-task context-free monotone transforms, trained jointly on the
// click label: s = sigmoid(sum_k w_k g_k(p_k) + b).
struct LrUmnnFuser {
  std::vector<UmnnHead> heads;
  Parameter w;  // 1 x K
  Parameter b;  // 1 x 1
  int quad_nodes = 16;
};

LrUmnnFuser make_lr_umnn(Rng& rng, int num_tasks, int hidden, int depth, int quad_nodes);
double lr_umnn_score(const LrUmnnFuser& fuser, std::span<const double> pxtrs);
LrUmnnFuser train_lr_umnn(std::span<const RawInteraction> records,
                          const BaselineTrainConfig& cfg);

}  // namespace umre
