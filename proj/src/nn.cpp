#include "umre/nn.hpp"

#include <algorithm>
#include <cmath>

namespace umre {

double elu_scalar(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad_scalar(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

double activate(Act a, double x) {
  switch (a) {
    case Act::kNone:
      return x;
    case Act::kRelu:
      return x > 0.0 ? x : 0.0;
    case Act::kSoftplus:
      // log(1 + e^x) without overflow
      return x > 30.0 ? x : std::log1p(std::exp(x));
  }
  return x;
}

double activate_grad(Act a, double x) {
  switch (a) {
    case Act::kNone:
      return 1.0;
    case Act::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
    case Act::kSoftplus:
      return 1.0 / (1.0 + std::exp(-x));
  }
  return 1.0;
}

Tensor2 elu(const Tensor2& x) {
  Tensor2 y = x;
  for (double& v : y.data) v = elu_scalar(v);
  return y;
}

Tensor2 linear_forward(const Tensor2& x, const Parameter& w, const Parameter& b) {
  require(x.cols == w.value.rows, "linear_forward: x.cols != w.rows");
  require(b.value.rows == 1 && b.value.cols == w.value.cols,
          "linear_forward: bias shape mismatch");
  const int n = x.rows, in = x.cols, out = w.value.cols;
  Tensor2 y(n, out);
  for (int i = 0; i < n; ++i) {
    double* yi = y.row_ptr(i);
    const double* xi = x.row_ptr(i);
    for (int j = 0; j < out; ++j) yi[j] = b.value.data[j];
    for (int k = 0; k < in; ++k) {
      const double xv = xi[k];
      if (xv == 0.0) continue;
      const double* wk = w.value.row_ptr(k);
      for (int j = 0; j < out; ++j) yi[j] += xv * wk[j];
    }
  }
  return y;
}

Tensor2 linear_backward(const Tensor2& x, Parameter& w, Parameter& b, const Tensor2& d_out) {
  require(d_out.rows == x.rows && d_out.cols == w.value.cols,
          "linear_backward: upstream shape mismatch");
  const int n = x.rows, in = x.cols, out = w.value.cols;
  Tensor2 dx(n, in);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row_ptr(i);
    const double* di = d_out.row_ptr(i);
    double* dxi = dx.row_ptr(i);
    for (int j = 0; j < out; ++j) b.grad.data[j] += di[j];
    for (int k = 0; k < in; ++k) {
      const double* wk = w.value.row_ptr(k);
      double* gwk = w.grad.row_ptr(k);
      double acc = 0.0;
      for (int j = 0; j < out; ++j) {
        gwk[j] += xi[k] * di[j];
        acc += wk[j] * di[j];
      }
      dxi[k] = acc;
    }
  }
  return dx;
}

Tensor2 softmax_rows(const Tensor2& x) {
  Tensor2 y(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row_ptr(i);
    double* yi = y.row_ptr(i);
    double mx = xi[0];
    for (int j = 1; j < x.cols; ++j) mx = std::max(mx, xi[j]);
    double sum = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      sum += yi[j];
    }
    for (int j = 0; j < x.cols; ++j) yi[j] /= sum;
  }
  return y;
}

Tensor2 softmax_rows_backward(const Tensor2& y, const Tensor2& d_y) {
  require(y.same_shape(d_y), "softmax_rows_backward: shape mismatch");
  Tensor2 dx(y.rows, y.cols);
  for (int i = 0; i < y.rows; ++i) {
    const double* yi = y.row_ptr(i);
    const double* di = d_y.row_ptr(i);
    double dot = 0.0;
    for (int j = 0; j < y.cols; ++j) dot += di[j] * yi[j];
    double* dxi = dx.row_ptr(i);
    for (int j = 0; j < y.cols; ++j) dxi[j] = (di[j] - dot) * yi[j];
  }
  return dx;
}

MseResult mse_loss(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size(), "mse_loss: length mismatch");
  require(!pred.empty(), "mse_loss: empty input");
  const double n = static_cast<double>(pred.size());
  MseResult r;
  r.grad.resize(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

void glorot_init(Rng& rng, Tensor2& t, int fan_in, int fan_out) {
  const double lim = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-lim, lim);
}

Mlp Mlp::make(Rng& rng, const std::string& prefix, int in_dim, const std::vector<int>& hidden,
              int out_dim, Act hidden_act) {
  require(in_dim > 0 && out_dim > 0, "Mlp::make: non-positive dims");
  Mlp mlp;
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int h : hidden) {
    require(h > 0, "Mlp::make: non-positive hidden width");
    dims.push_back(h);
  }
  dims.push_back(out_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    const std::string tag = prefix + ".l" + std::to_string(l);
    layer.w = Parameter(tag + ".w", dims[l], dims[l + 1]);
    layer.b = Parameter(tag + ".b", 1, dims[l + 1]);
    glorot_init(rng, layer.w.value, dims[l], dims[l + 1]);
    layer.act = (l + 1 < dims.size() - 1) ? hidden_act : Act::kNone;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

Tensor2 Mlp::forward(const Tensor2& x, MlpCache* cache) const {
  Tensor2 cur = x;
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  for (const DenseLayer& layer : layers) {
    if (cache) cache->inputs.push_back(cur);
    Tensor2 pre = linear_forward(cur, layer.w, layer.b);
    if (cache) cache->preacts.push_back(pre);
    if (layer.act != Act::kNone)
      for (double& v : pre.data) v = activate(layer.act, v);
    cur = std::move(pre);
  }
  return cur;
}

Tensor2 Mlp::backward(const MlpCache& cache, const Tensor2& d_out) {
  require(cache.inputs.size() == layers.size(), "Mlp::backward: stale cache");
  Tensor2 d = d_out;
  for (size_t l = layers.size(); l-- > 0;) {
    DenseLayer& layer = layers[l];
    if (layer.act != Act::kNone) {
      const Tensor2& pre = cache.preacts[l];
      for (size_t i = 0; i < d.data.size(); ++i)
        d.data[i] *= activate_grad(layer.act, pre.data[i]);
    }
    d = linear_backward(cache.inputs[l], layer.w, layer.b, d);
  }
  return d;
}

ParamRefs Mlp::params() {
  ParamRefs refs;
  for (DenseLayer& layer : layers) {
    refs.push_back(&layer.w);
    refs.push_back(&layer.b);
  }
  return refs;
}

AdamW::AdamW(ParamRefs params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  require(cfg_.lr > 0.0, "AdamW: learning rate must be positive");
  require(cfg_.weight_decay >= 0.0, "AdamW: weight decay must be non-negative");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Tensor2& m = m_[i];
    Tensor2& v = v_[i];
    for (size_t j = 0; j < p.value.data.size(); ++j) {
      const double g = p.grad.data[j];
      m.data[j] = cfg_.beta1 * m.data[j] + (1.0 - cfg_.beta1) * g;
      v.data[j] = cfg_.beta2 * v.data[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      p.value.data[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                    cfg_.weight_decay * p.value.data[j]);
    }
    p.zero_grad();
  }
}

double finite_diff_check(const std::function<double()>& f, const ParamRefs& params, double eps) {
  require(eps >= 1e-8 && eps <= 1e-3, "finite_diff_check: eps outside [1e-8, 1e-3]");
  double max_err = 0.0;
  for (Parameter* p : params) {
    for (size_t j = 0; j < p->value.data.size(); ++j) {
      const double saved = p->value.data[j];
      p->value.data[j] = saved + eps;
      const double fp = f();
      p->value.data[j] = saved - eps;
      const double fm = f();
      p->value.data[j] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("finite_diff_check: non-finite loss");
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = p->grad.data[j];
      const double err = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace umre
