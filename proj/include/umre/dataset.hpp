#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "umre/encoder.hpp"

namespace umre {

struct RawInteraction {
  long long user_id = 0;
  long long item_id = 0;
  int category_id = 0;
  long long ts = 0;  // seconds
  std::vector<int> labels;
  std::vector<double> pxtrs;
};

// A >= min-size group of one user's interactions inside one time window,
// plus the most recent prior events as encoder history.
struct Session {
  long long user_id = 0;
  std::vector<RawInteraction> records;
  std::vector<BehaviorEvent> history;  // oldest to newest, strictly before the session
};

// action-type id for a history event: 0 is padding, 1 means no positive
// label, 2+m is the first positive task m
int derive_action_type(std::span<const int> labels);

// Anchored half-open windows [first, first + window_s); sessions with
// fewer than min_records are dropped; history keeps the latest
// max_history prior interactions of the user.
std::vector<Session> segment_sessions(std::vector<RawInteraction> interactions,
                                      long long window_s = 3600, int min_records = 20,
                                      int max_history = kMaxHistory);

enum class LabelMode { kBernoulli, kThreshold };

struct SyntheticConfig {
  int users = 200;
  int items = 500;
  int categories = 20;
  int tasks = 6;
  std::vector<double> target_rates;  // per task, in (0,1)
  std::vector<double> slopes;        // per-task steepness a_m; defaulted if empty
  int latent_dim = 8;
  double noise = 0.05;  // bounded pxtr distortion, uniform in [-noise, noise]
  uint64_t seed = 0;
  int sessions_per_user = 2;
  int session_len = 25;
  bool use_warps = true;            // per-task monotone warps, round-robin
  LabelMode label_mode = LabelMode::kBernoulli;

  void validate() const;
};

// Latent-factor generator: propensity_m = sigmoid(a_m * <u_f, i_f> + b_m)
// with b_m calibrated to the target rate; pxtr_m = clamp(warp_m(propensity)
// + noise, 0, 1). Deterministic under seed.
std::vector<RawInteraction> generate_synthetic(const SyntheticConfig& cfg);

// True propensities for the same config/records, aligned by record index.
// Test hook: a ranker using these is order-optimal by construction.
std::vector<std::vector<double>> synthetic_true_propensities(const SyntheticConfig& cfg);

struct SplitResult {
  std::vector<Session> train, valid, test;
};

// Session-granularity split, deterministic under seed; floor sizes for
// train/valid, remainder to test.
SplitResult split_sessions(std::vector<Session> sessions, const std::vector<double>& ratios,
                           uint64_t seed);

// Line-delimited JSON records. Errors carry 1-based line numbers.
std::vector<RawInteraction> load_dataset(const std::string& path);
void save_dataset(const std::string& path, std::span<const RawInteraction> records);

std::vector<double> positive_rates(std::span<const RawInteraction> records);

}  // namespace umre
