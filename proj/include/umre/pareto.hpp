#pragma once

#include <span>
#include <vector>

namespace umre {

struct ParetoConfig {
  double gamma = 0.5;
  int warmup = 2;  // E_s
  double omega_min = 0.05;
  double omega_max = 0.8;
  double eps = 1e-3;       // L1 convergence tolerance
  int max_epochs = 30;     // E_max
  bool literal_alg1 = false;  // subtract delta instead of adding it

  void validate(int num_tasks) const;
};

// omega_m proportional to 1/rate_m, normalized, then clipped into
// [omega_min, omega_max] and renormalized.
std::vector<double> init_weights(std::span<const double> positive_rates, double omega_min,
                                 double omega_max);

// r = sum_m omega_m y_m, labels binary
double compose_reward(std::span<const int> y, std::span<const double> omega);

// Negative-feedback update: omega'_m = normalize(omega_m + gamma*(u_prev_m - u_cur_m)),
// then clip + renormalize onto the box-constrained simplex. A metric whose
// UAUC dropped gains weight. literal_alg1 flips the sign to match the
// pseudocode line. Rejected updates (non-positive mass) leave omega
// unchanged and set *rejected.
std::vector<double> pareto_update(std::span<const double> omega, std::span<const double> u_prev,
                                  std::span<const double> u_cur, const ParetoConfig& cfg,
                                  bool* rejected = nullptr);

// L1 distance < eps
bool converged(std::span<const double> omega_prev, std::span<const double> omega_cur, double eps);

// Clip into [lo, hi], then redistribute the simplex deficit/surplus
// proportionally to per-coordinate slack; lands exactly in box + simplex
// (requires M*lo <= 1 <= M*hi). Exposed for tests.
void clip_renormalize(std::vector<double>& v, double lo, double hi);

}  // namespace umre
