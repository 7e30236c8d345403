#include "umre/umnn.hpp"

#include <cmath>
#include <numbers>

namespace umre {

namespace {
constexpr double kClampLo = 1e-9;
constexpr double kClampHi = 1.0 - 1e-9;
constexpr double kRangeSlack = 1e-6;

double clamp_p(double p) {
  if (p < -kRangeSlack || p > 1.0 + kRangeSlack)
    throw std::invalid_argument("umnn: pxtr outside [0, 1]");
  return std::min(std::max(p, kClampLo), kClampHi);
}

void fill_input_row(const UmnnHead& head, double t, std::span<const double> h, double* row) {
  row[0] = t;
  for (int i = 0; i < head.context_dim; ++i) row[1 + i] = h[i];
  positional_encoding(t, head.pos_dim, row + 1 + head.context_dim);
}
}  // namespace

void positional_encoding(double t, int dim, double* out) {
  for (int i = 0; i < dim; ++i) {
    const double freq = std::numbers::pi * (1 + i / 2);
    out[i] = (i % 2 == 0) ? std::sin(freq * t) : std::cos(freq * t);
  }
}

UmnnHead UmnnHead::make(Rng& rng, int task, const UmnnConfig& cfg) {
  require(cfg.context_dim >= 0 && cfg.pos_dim >= 0, "UmnnHead: negative dims");
  UmnnHead head;
  head.task = task;
  head.context_dim = cfg.context_dim;
  head.pos_dim = cfg.pos_dim;
  const std::string prefix = "umnn." + std::to_string(task);
  std::vector<int> hidden(static_cast<size_t>(cfg.depth), cfg.hidden);
  head.integrand =
      Mlp::make(rng, prefix + ".f", head.input_dim(), hidden, 1, Act::kSoftplus);
  head.beta = Parameter(prefix + ".beta", 1, 1);
  head.beta.value(0, 0) = rng.uniform(-0.5, 0.5);
  return head;
}

ParamRefs UmnnHead::params() {
  ParamRefs refs = integrand.params();
  refs.push_back(&beta);
  return refs;
}

double integrand_eval(const UmnnHead& head, double t, std::span<const double> h) {
  require(static_cast<int>(h.size()) == head.context_dim, "integrand_eval: context dim mismatch");
  Tensor2 x(1, head.input_dim());
  fill_input_row(head, t, h, x.row_ptr(0));
  const Tensor2 z = head.integrand.forward(x);
  return elu_scalar(z(0, 0)) + 1.0;
}

double transform_forward(const UmnnHead& head, double p, std::span<const double> h,
                         const QuadratureRule& rule, TransformCache* cache) {
  require(static_cast<int>(h.size()) == head.context_dim,
          "transform_forward: context dim mismatch");
  const double pc = clamp_p(p);
  const double half = pc / 2.0;
  // One batched integrand pass over all nodes; with a cache the upper
  // limit rides along as an extra row for the FTC gradient.
  const int q = rule.q;
  const int n_rows = cache ? q + 1 : q;
  Tensor2 inputs(n_rows, head.input_dim());
  for (int i = 0; i < q; ++i)
    fill_input_row(head, half * (rule.nodes[i] + 1.0), h, inputs.row_ptr(i));
  if (cache) fill_input_row(head, pc, h, inputs.row_ptr(q));

  MlpCache local;
  const Tensor2 z = head.integrand.forward(inputs, cache ? &cache->mlp : &local);
  double acc = 0.0;
  for (int i = 0; i < q; ++i) acc += rule.weights[i] * (elu_scalar(z(i, 0)) + 1.0);
  const double out = half * acc + head.beta.value(0, 0);

  if (cache) {
    cache->p_clamped = pc;
    cache->inputs = std::move(inputs);
    cache->z = z;
    cache->f_upper = elu_scalar(z(q, 0)) + 1.0;
  }
  return out;
}

TransformInputGrads transform_backward(UmnnHead& head, const TransformCache& cache,
                                       const QuadratureRule& rule, double upstream) {
  const int q = rule.q;
  require(cache.z.rows == q + 1, "transform_backward: cache/rule mismatch");
  const double half = cache.p_clamped / 2.0;

  Tensor2 d_z(q + 1, 1);
  for (int i = 0; i < q; ++i)
    d_z(i, 0) = upstream * half * rule.weights[i] * elu_grad_scalar(cache.z(i, 0));
  d_z(q, 0) = 0.0;  // upper-limit row contributes no parameter gradient

  const Tensor2 d_inputs = head.integrand.backward(cache.mlp, d_z);
  head.beta.grad(0, 0) += upstream;

  TransformInputGrads grads;
  grads.d_p = upstream * cache.f_upper;
  grads.d_h.assign(static_cast<size_t>(head.context_dim), 0.0);
  for (int i = 0; i < q; ++i) {
    const double* row = d_inputs.row_ptr(i);
    for (int c = 0; c < head.context_dim; ++c) grads.d_h[c] += row[1 + c];
  }
  return grads;
}

std::vector<double> transform_all(const std::vector<UmnnHead>& heads,
                                  std::span<const double> pxtrs, std::span<const double> h,
                                  const QuadratureRule& rule,
                                  std::vector<TransformCache>* caches) {
  require(heads.size() == pxtrs.size(), "transform_all: heads/pxtrs length mismatch");
  std::vector<double> out(heads.size());
  if (caches) caches->resize(heads.size());
  for (size_t k = 0; k < heads.size(); ++k)
    out[k] = transform_forward(heads[k], pxtrs[k], h, rule, caches ? &(*caches)[k] : nullptr);
  return out;
}

}  // namespace umre
