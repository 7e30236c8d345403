#include "umre/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace umre {

QuadratureRule clenshaw_curtis(int q) {
  if (q < 2) throw std::invalid_argument("clenshaw_curtis: Q must be >= 2");
  const int n = q - 1;
  QuadratureRule rule;
  rule.q = q;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  for (int k = 0; k <= n; ++k) {
    // cos(pi*k/n) descends; store ascending
    rule.nodes[n - k] = std::cos(std::numbers::pi * k / n);
    double s = 0.0;
    for (int j = 1; j <= n / 2; ++j) {
      const double bj = (2 * j == n) ? 1.0 : 2.0;
      s += bj / (4.0 * j * j - 1.0) * std::cos(2.0 * std::numbers::pi * j * k / n);
    }
    const double ck = (k == 0 || k == n) ? 1.0 : 2.0;
    rule.weights[n - k] = ck / n * (1.0 - s);
  }
  // endpoints of cos() can land on +/-1 with rounding dust
  rule.nodes.front() = -1.0;
  rule.nodes.back() = 1.0;
  return rule;
}

const QuadratureRule& clenshaw_curtis_cached(int q) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(q);
  if (it == cache.end()) it = cache.emplace(q, clenshaw_curtis(q)).first;
  return it->second;
}

double integrate_upper(const std::function<double(double)>& f, double p,
                       const QuadratureRule& rule) {
  if (p < 0.0) throw std::invalid_argument("integrate_upper: negative upper limit");
  if (p == 0.0) return 0.0;
  const double half = p / 2.0;
  double acc = 0.0;
  for (int i = 0; i < rule.q; ++i) {
    const double t = half * (rule.nodes[i] + 1.0);
    acc += rule.weights[i] * f(t);
  }
  return half * acc;
}

}  // namespace umre
