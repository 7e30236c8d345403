#pragma once

#include <span>
#include <vector>

#include "umre/nn.hpp"
#include "umre/quadrature.hpp"

namespace umre {

// Context fed to the integrand: user embedding ++ item embedding. May be
// empty (context-free transform).
using ContextVector = std::vector<double>;

struct UmnnConfig {
  int context_dim = 64;
  int hidden = 128;
  int depth = 3;
  int pos_dim = 4;
};

// One strictly monotone per-task transform
//   g(p, h) = integral_0^p f(t, h) dt + beta,   f = ELU(mlp(t ++ h ++ pos(t))) + 1 > 0.
// The integrand mlp uses softplus hidden activations: the quadrature and
// the upper-limit gradient identity need a smooth integrand.
struct UmnnHead {
  int task = 0;
  int context_dim = 0;
  int pos_dim = 4;
  Mlp integrand;
  Parameter beta;  // 1x1, init U(-0.5, 0.5)

  static UmnnHead make(Rng& rng, int task, const UmnnConfig& cfg);
  ParamRefs params();
  int input_dim() const { return 1 + context_dim + pos_dim; }
};

// sin/cos pairs at frequencies pi, 2*pi, ... (dim entries)
void positional_encoding(double t, int dim, double* out);

double integrand_eval(const UmnnHead& head, double t, std::span<const double> h);

struct TransformCache {
  double p_clamped = 0.0;
  Tensor2 inputs;  // (Q+1) x input_dim; last row evaluates the upper limit
  MlpCache mlp;
  Tensor2 z;       // raw mlp outputs, pre ELU+1
  double f_upper = 0.0;
};

// Quadrature forward: sum_q (p/2) w_q f(t_q, h) + beta. p outside
// [-1e-6, 1+1e-6] errors; inside, p is clamped to [1e-9, 1-1e-9].
double transform_forward(const UmnnHead& head, double p, std::span<const double> h,
                         const QuadratureRule& rule, TransformCache* cache = nullptr);

struct TransformInputGrads {
  double d_p = 0.0;  // upper-limit gradient: upstream * f(p, h)
  std::vector<double> d_h;
};

// Leibniz-rule backward: d/d_theta = sum_q (p/2) w_q df(t_q)/d_theta,
// d/d_beta = 1, d/dp = f(p, h). Accumulates into head parameter grads.
TransformInputGrads transform_backward(UmnnHead& head, const TransformCache& cache,
                                       const QuadratureRule& rule, double upstream);

// Element-wise transform of the K pxtrs with task-specific heads.
std::vector<double> transform_all(const std::vector<UmnnHead>& heads,
                                  std::span<const double> pxtrs, std::span<const double> h,
                                  const QuadratureRule& rule,
                                  std::vector<TransformCache>* caches = nullptr);

}  // namespace umre
