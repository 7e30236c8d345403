#pragma once

#include <functional>
#include <vector>

namespace umre {

// Clenshaw-Curtis nodes/weights on [-1, 1]. Immutable once built.
struct QuadratureRule {
  int q = 0;
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // non-negative, sum = 2
};

// nodes cos(pi*k/(Q-1)) sorted ascending; weights by the direct cosine sum.
// Exact for polynomials of degree <= Q-1.
QuadratureRule clenshaw_curtis(int q);

// Shared per-Q cache; rules are immutable after construction.
const QuadratureRule& clenshaw_curtis_cached(int q);

// Integral of f over [0, p]: affine remap of the rule with Jacobian p/2.
// p = 0 gives 0 exactly; p < 0 is an error.
double integrate_upper(const std::function<double(double)>& f, double p,
                       const QuadratureRule& rule);

}  // namespace umre
