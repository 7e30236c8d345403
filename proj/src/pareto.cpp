#include "umre/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "umre/tensor.hpp"

namespace umre {

void ParetoConfig::validate(int num_tasks) const {
  require(gamma > 0.0, "pareto: gamma must be positive");
  require(warmup >= 0 && max_epochs >= 1, "pareto: need warmup >= 0 and max_epochs >= 1");
  if (warmup >= max_epochs)
    std::cerr << "warning: warmup >= max_epochs, weight adaptation never activates\n";
  require(eps > 0.0, "pareto: eps must be positive");
  if (num_tasks >= 2) {
    const double uniform = 1.0 / num_tasks;
    require(omega_min >= 0.0 && omega_min < uniform, "pareto: need 0 <= omega_min < 1/M");
    require(omega_max > uniform && omega_max <= 1.0, "pareto: need 1/M < omega_max <= 1");
  }
}

void clip_renormalize(std::vector<double>& v, double lo, double hi) {
  const size_t m = v.size();
  if (m == 1) {
    v[0] = 1.0;
    return;
  }
  for (double& x : v) x = std::clamp(x, lo, hi);
  double sum = 0.0;
  for (double x : v) sum += x;
  if (std::abs(sum - 1.0) <= 1e-14) return;
  if (sum > 1.0) {
    double slack = sum - m * lo;  // > sum - 1 > 0 when m*lo <= 1
    const double excess = sum - 1.0;
    for (double& x : v) x -= excess * (x - lo) / slack;
  } else {
    double headroom = m * hi - sum;  // > 1 - sum > 0 when m*hi >= 1
    const double deficit = 1.0 - sum;
    for (double& x : v) x += deficit * (hi - x) / headroom;
  }
}

std::vector<double> init_weights(std::span<const double> positive_rates, double omega_min,
                                 double omega_max) {
  require(!positive_rates.empty(), "init_weights: empty rates");
  std::vector<double> w(positive_rates.size());
  double sum = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    require(positive_rates[i] > 0.0, "init_weights: positive rates required");
    w[i] = 1.0 / positive_rates[i];
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  clip_renormalize(w, omega_min, omega_max);
  return w;
}

double compose_reward(std::span<const int> y, std::span<const double> omega) {
  require(y.size() == omega.size(), "compose_reward: label/weight length mismatch");
  double r = 0.0;
  for (size_t m = 0; m < y.size(); ++m) {
    require(y[m] == 0 || y[m] == 1, "compose_reward: labels must be binary");
    r += omega[m] * y[m];
  }
  return r;
}

std::vector<double> pareto_update(std::span<const double> omega, std::span<const double> u_prev,
                                  std::span<const double> u_cur, const ParetoConfig& cfg,
                                  bool* rejected) {
  require(omega.size() == u_prev.size() && omega.size() == u_cur.size(),
          "pareto_update: length mismatch");
  if (rejected) *rejected = false;
  std::vector<double> v(omega.size());
  double sum = 0.0;
  bool any_delta = false;
  for (size_t m = 0; m < omega.size(); ++m) {
    const double delta = cfg.gamma * (u_prev[m] - u_cur[m]);
    if (delta != 0.0) any_delta = true;
    v[m] = cfg.literal_alg1 ? omega[m] - delta : omega[m] + delta;
    sum += v[m];
  }
  // exact fixed point at unchanged UAUCs
  if (!any_delta) return std::vector<double>(omega.begin(), omega.end());
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    std::cerr << "warning: pareto update rejected (non-positive weight mass " << sum
              << "); keeping previous weights\n";
    if (rejected) *rejected = true;
    return std::vector<double>(omega.begin(), omega.end());
  }
  for (double& x : v) x /= sum;
  clip_renormalize(v, cfg.omega_min, cfg.omega_max);
  return v;
}

bool converged(std::span<const double> omega_prev, std::span<const double> omega_cur,
               double eps) {
  require(omega_prev.size() == omega_cur.size(), "converged: length mismatch");
  double l1 = 0.0;
  for (size_t m = 0; m < omega_prev.size(); ++m) l1 += std::abs(omega_prev[m] - omega_cur[m]);
  return l1 < eps;
}

}  // namespace umre
