#include <doctest.h>

#include "umre/errors.hpp"
#include "umre/pipeline.hpp"
#include "umre/trainer.hpp"

using namespace umre;

namespace {

SyntheticConfig tiny_synth() {
  SyntheticConfig cfg;
  cfg.users = 24;
  cfg.items = 60;
  cfg.categories = 6;
  cfg.tasks = 2;
  cfg.target_rates = {0.4, 0.15};
  cfg.sessions_per_user = 2;
  cfg.session_len = 20;
  cfg.seed = 3;
  cfg.noise = 0.05;
  return cfg;
}

struct TinyData {
  SplitResult splits;
  ModelConfig model_cfg;
};

TinyData tiny_data() {
  TinyData d;
  const std::vector<RawInteraction> records = generate_synthetic(tiny_synth());
  std::vector<Session> sessions = segment_sessions(records);
  d.splits = split_sessions(std::move(sessions), {0.7, 0.15, 0.15}, 1);
  d.model_cfg.num_tasks = 2;
  d.model_cfg.item_vocab = 61;
  d.model_cfg.category_vocab = 7;
  d.model_cfg.action_vocab = 4;
  d.model_cfg.hist_emb_dim = 4;
  d.model_cfg.gru_hidden = 6;
  d.model_cfg.item_ctx_dim = 4;
  d.model_cfg.umnn_hidden = 8;
  d.model_cfg.umnn_depth = 2;
  d.model_cfg.task_emb_dim = 4;
  d.model_cfg.d_k = 4;
  d.model_cfg.quad_nodes = 8;
  return d;
}

TrainSettings quick_settings(int epochs) {
  TrainSettings ts;
  ts.max_epochs = epochs;
  ts.batch_sessions = 8;
  ts.pareto.warmup = 1;
  ts.pareto.max_epochs = epochs;
  ts.seed = 5;
  return ts;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("a single-epoch run performs no weight update") {
  TinyData d = tiny_data();
  UmreModel model(d.model_cfg, 7);
  const TrainResult r = train_model(model, d.splits.train, d.splits.valid, quick_settings(1));
  CHECK(r.epochs_run == 1);
  CHECK(r.trace.size() == 1);
  CHECK(r.trace[0].omega == r.final_omega);  // warm-up: inverse-rate init untouched
  CHECK_FALSE(r.converged_early);
}

TEST_CASE("training is deterministic under fixed seeds") {
  TinyData d = tiny_data();
  UmreModel a(d.model_cfg, 7);
  UmreModel b(d.model_cfg, 7);
  const TrainResult ra = train_model(a, d.splits.train, d.splits.valid, quick_settings(3));
  const TrainResult rb = train_model(b, d.splits.train, d.splits.valid, quick_settings(3));
  REQUIRE(ra.trace.size() == rb.trace.size());
  for (size_t e = 0; e < ra.trace.size(); ++e) {
    CHECK(ra.trace[e].train_loss == rb.trace[e].train_loss);  // bitwise
    CHECK(ra.trace[e].omega == rb.trace[e].omega);
    CHECK(ra.trace[e].uauc == rb.trace[e].uauc);
  }
}

TEST_CASE("weights move after warm-up and stay on the boxed simplex") {
  TinyData d = tiny_data();
  UmreModel model(d.model_cfg, 7);
  TrainSettings ts = quick_settings(4);
  const TrainResult r = train_model(model, d.splits.train, d.splits.valid, ts);
  REQUIRE(r.trace.size() >= 2);
  for (const EpochLog& log : r.trace) {
    double sum = 0.0;
    for (double w : log.omega) {
      CHECK(w >= ts.pareto.omega_min - 1e-12);
      CHECK(w <= ts.pareto.omega_max + 1e-12);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pareto disabled keeps the static inverse-rate weights") {
  TinyData d = tiny_data();
  UmreModel model(d.model_cfg, 7);
  TrainSettings ts = quick_settings(3);
  ts.pareto_enabled = false;
  const TrainResult r = train_model(model, d.splits.train, d.splits.valid, ts);
  for (const EpochLog& log : r.trace) CHECK(log.omega == r.final_omega);
}

TEST_CASE("training loss decreases on the tiny set") {
  TinyData d = tiny_data();
  UmreModel model(d.model_cfg, 7);
  const TrainResult r = train_model(model, d.splits.train, d.splits.valid, quick_settings(5));
  CHECK(r.trace.back().train_loss < r.trace.front().train_loss);
}

TEST_CASE("a diverging run aborts with a numeric error naming the batch") {
  TinyData d = tiny_data();
  UmreModel model(d.model_cfg, 7);
  TrainSettings ts = quick_settings(2);
  ts.batch_sessions = 4;
  ts.adam.lr = 1e280;  // guaranteed blow-up on the second step
  try {
    train_model(model, d.splits.train, d.splits.valid, ts);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

}  // TEST_SUITE
