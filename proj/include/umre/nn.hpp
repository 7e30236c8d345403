#pragma once

#include <functional>
#include <span>
#include <vector>

#include "umre/rng.hpp"
#include "umre/tensor.hpp"

namespace umre {

enum class Act { kNone, kRelu, kSoftplus };

double activate(Act a, double x);
double activate_grad(Act a, double x);  // derivative at pre-activation x

// elementwise ELU: x if x > 0 else exp(x) - 1
Tensor2 elu(const Tensor2& x);
double elu_scalar(double x);
double elu_grad_scalar(double x);

// x (N x in) * w (in x out) + b (1 x out), b broadcast over rows
Tensor2 linear_forward(const Tensor2& x, const Parameter& w, const Parameter& b);

// accumulates dW, db; returns dX
Tensor2 linear_backward(const Tensor2& x, Parameter& w, Parameter& b, const Tensor2& d_out);

// numerically stable row-wise softmax (max subtraction)
Tensor2 softmax_rows(const Tensor2& x);

// dX for y = softmax_rows(x): dx = (dy - sum(dy*y)) * y, per row
Tensor2 softmax_rows_backward(const Tensor2& y, const Tensor2& d_y);

struct MseResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d pred
};
MseResult mse_loss(std::span<const double> pred, std::span<const double> target);

struct DenseLayer {
  Parameter w;
  Parameter b;
  Act act = Act::kNone;
};

struct MlpCache {
  std::vector<Tensor2> inputs;   // input of each layer
  std::vector<Tensor2> preacts;  // pre-activation of each layer
};

// Plain feed-forward stack. Hidden layers share one activation; the last
// layer is linear. Weights Glorot-uniform, biases zero.
struct Mlp {
  std::vector<DenseLayer> layers;

  static Mlp make(Rng& rng, const std::string& prefix, int in_dim,
                  const std::vector<int>& hidden, int out_dim, Act hidden_act);

  Tensor2 forward(const Tensor2& x, MlpCache* cache = nullptr) const;
  // accumulates layer grads, returns dX
  Tensor2 backward(const MlpCache& cache, const Tensor2& d_out);

  ParamRefs params();
  int in_dim() const { return layers.front().w.value.rows; }
  int out_dim() const { return layers.back().w.value.cols; }
};

void glorot_init(Rng& rng, Tensor2& t, int fan_in, int fan_out);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // decoupled
};

// Adaptive-moment optimizer with decoupled weight decay. step() consumes
// and zeroes the accumulated gradients.
class AdamW {
 public:
  AdamW(ParamRefs params, AdamConfig cfg);
  void step();
  const AdamConfig& config() const { return cfg_; }

 private:
  ParamRefs params_;
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<Tensor2> m_, v_;
};

// Central-difference check of analytic gradients already stored in params.
// f() must recompute the scalar loss from current parameter values.
// Returns max over coordinates of |a - n| / max(1, |a|, |n|).
double finite_diff_check(const std::function<double()>& f, const ParamRefs& params, double eps);

}  // namespace umre
