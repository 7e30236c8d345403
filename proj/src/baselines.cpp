#include "umre/baselines.hpp"

#include <cmath>

#include "umre/errors.hpp"

namespace umre {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// numerically stable BCE with logits; returns loss, sets d_logit
double bce_with_logit(double z, int y, double* d_logit) {
  const double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  *d_logit = sigmoid(z) - y;
  return loss;
}
}  // namespace

RankedSession single_sort(const Session& session, int task) {
  require(!session.records.empty(), "single_sort: empty session");
  require(task >= 0 && task < static_cast<int>(session.records.front().pxtrs.size()),
          "single_sort: task index out of range");
  std::vector<RankedItem> items;
  items.reserve(session.records.size());
  for (const RawInteraction& rec : session.records)
    items.push_back({rec.item_id, rec.pxtrs[task], rec.labels});
  return RankedSession::from_unsorted(std::move(items));
}

double lr_fuse(std::span<const double> pxtrs, const LrParams& params) {
  require(pxtrs.size() == params.w.size(), "lr_fuse: dimension mismatch");
  double z = params.b;
  for (size_t k = 0; k < pxtrs.size(); ++k) z += params.w[k] * pxtrs[k];
  return sigmoid(z);
}

LrParams train_lr(std::span<const RawInteraction> records, const BaselineTrainConfig& cfg) {
  require(!records.empty(), "train_lr: no records");
  const int k = static_cast<int>(records.front().pxtrs.size());
  require(cfg.click_task >= 0 && cfg.click_task < k, "train_lr: bad click task");
  Parameter w("lr.w", 1, k), b("lr.b", 1, 1);
  AdamConfig ac;
  ac.lr = cfg.lr;
  ac.weight_decay = 0.0;
  AdamW opt({&w, &b}, ac);
  const double inv_n = 1.0 / static_cast<double>(records.size());
  for (int it = 0; it < cfg.iterations; ++it) {
    for (const RawInteraction& rec : records) {
      double z = b.value(0, 0);
      for (int j = 0; j < k; ++j) z += w.value(0, j) * rec.pxtrs[j];
      double dz;
      bce_with_logit(z, rec.labels[cfg.click_task], &dz);
      dz *= inv_n;
      for (int j = 0; j < k; ++j) w.grad(0, j) += dz * rec.pxtrs[j];
      b.grad(0, 0) += dz;
    }
    opt.step();
  }
  LrParams out;
  out.w = w.value.row_vec(0);
  out.b = b.value(0, 0);
  return out;
}

double mlp_fuse(std::span<const double> pxtrs, const MlpFuser& fuser) {
  Tensor2 x(1, static_cast<int>(pxtrs.size()));
  std::copy(pxtrs.begin(), pxtrs.end(), x.data.begin());
  return sigmoid(fuser.net.forward(x)(0, 0));
}

MlpFuser train_mlp(std::span<const RawInteraction> records, const BaselineTrainConfig& cfg) {
  require(!records.empty(), "train_mlp: no records");
  const int k = static_cast<int>(records.front().pxtrs.size());
  Rng rng(cfg.seed);
  MlpFuser fuser{Mlp::make(rng, "mlpfuse", k, {64, 64}, 1, Act::kRelu)};
  AdamConfig ac;
  ac.lr = cfg.lr;
  ac.weight_decay = 0.0;
  AdamW opt(fuser.net.params(), ac);

  const int n = static_cast<int>(records.size());
  Tensor2 x(n, k);
  for (int i = 0; i < n; ++i)
    std::copy(records[i].pxtrs.begin(), records[i].pxtrs.end(), x.row_ptr(i));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < cfg.iterations; ++it) {
    MlpCache cache;
    const Tensor2 z = fuser.net.forward(x, &cache);
    Tensor2 dz(n, 1);
    for (int i = 0; i < n; ++i) {
      double g;
      bce_with_logit(z(i, 0), records[i].labels[cfg.click_task], &g);
      dz(i, 0) = g * inv_n;
    }
    fuser.net.backward(cache, dz);
    opt.step();
  }
  return fuser;
}

double formula_additive(std::span<const double> pxtrs, const FormulaParams& params) {
  require(pxtrs.size() == params.w.size() && pxtrs.size() == params.alpha.size() &&
              pxtrs.size() == params.b.size() && pxtrs.size() == params.beta.size(),
          "formula_additive: parameter length mismatch");
  double s = 0.0;
  for (size_t k = 0; k < pxtrs.size(); ++k) {
    const double base = params.alpha[k] * pxtrs[k] + params.b[k];
    const double beta = params.beta[k];
    const bool integral_exp = beta == std::floor(beta);
    if (base < 0.0 && !integral_exp)
      throw std::domain_error("formula_additive: negative base with fractional exponent");
    if (base == 0.0 && beta < 0.0)
      throw std::domain_error("formula_additive: zero base with negative exponent");
    s += params.w[k] * std::pow(base, beta);
  }
  return s;
}

double formula_multiplicative(std::span<const double> pxtrs, const FormulaParams& params) {
  require(pxtrs.size() == params.w.size() && pxtrs.size() == params.alpha.size() &&
              pxtrs.size() == params.b.size() && pxtrs.size() == params.beta.size(),
          "formula_multiplicative: parameter length mismatch");
  double log_s = 0.0;
  for (size_t k = 0; k < pxtrs.size(); ++k) {
    if (params.w[k] == 0.0) continue;  // empty factor
    const double base = params.alpha[k] * pxtrs[k] + params.b[k];
    if (base <= 0.0)
      throw std::domain_error("formula_multiplicative: non-positive base");
    log_s += params.w[k] * params.beta[k] * std::log(base);
  }
  return std::exp(log_s);
}

LrUmnnFuser make_lr_umnn(Rng& rng, int num_tasks, int hidden, int depth, int quad_nodes) {
  LrUmnnFuser f;
  UmnnConfig ucfg;
  ucfg.context_dim = 0;
  ucfg.hidden = hidden;
  ucfg.depth = depth;
  f.heads.reserve(num_tasks);
  for (int k = 0; k < num_tasks; ++k) f.heads.push_back(UmnnHead::make(rng, k, ucfg));
  f.w = Parameter("lru.w", 1, num_tasks);
  glorot_init(rng, f.w.value, 1, num_tasks);
  f.b = Parameter("lru.b", 1, 1);
  f.quad_nodes = quad_nodes;
  return f;
}

double lr_umnn_score(const LrUmnnFuser& fuser, std::span<const double> pxtrs) {
  require(pxtrs.size() == fuser.heads.size(), "lr_umnn_score: dimension mismatch");
  const QuadratureRule& rule = clenshaw_curtis_cached(fuser.quad_nodes);
  double z = fuser.b.value(0, 0);
  for (size_t k = 0; k < fuser.heads.size(); ++k)
    z += fuser.w.value(0, static_cast<int>(k)) *
         transform_forward(fuser.heads[k], pxtrs[k], {}, rule);
  return sigmoid(z);
}

LrUmnnFuser train_lr_umnn(std::span<const RawInteraction> records,
                          const BaselineTrainConfig& cfg) {
  require(!records.empty(), "train_lr_umnn: no records");
  const int k = static_cast<int>(records.front().pxtrs.size());
  Rng rng(cfg.seed);
  LrUmnnFuser fuser = make_lr_umnn(rng, k, cfg.umnn_hidden, cfg.umnn_depth, cfg.quad_nodes);
  const QuadratureRule& rule = clenshaw_curtis_cached(fuser.quad_nodes);

  ParamRefs params{&fuser.w, &fuser.b};
  for (UmnnHead& head : fuser.heads)
    for (Parameter* p : head.params()) params.push_back(p);
  AdamConfig ac;
  ac.lr = cfg.umnn_lr;
  AdamW opt(params, ac);

  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = rng.fork(0x7368);
  for (int epoch = 0; epoch < cfg.umnn_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += cfg.umnn_batch) {
      const size_t end = std::min(order.size(), start + cfg.umnn_batch);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      for (size_t idx = start; idx < end; ++idx) {
        const RawInteraction& rec = records[order[idx]];
        std::vector<TransformCache> caches(k);
        double z = fuser.b.value(0, 0);
        std::vector<double> t(k);
        for (int j = 0; j < k; ++j) {
          t[j] = transform_forward(fuser.heads[j], rec.pxtrs[j], {}, rule, &caches[j]);
          z += fuser.w.value(0, j) * t[j];
        }
        double dz;
        bce_with_logit(z, rec.labels[cfg.click_task], &dz);
        dz *= inv_b;
        fuser.b.grad(0, 0) += dz;
        for (int j = 0; j < k; ++j) {
          fuser.w.grad(0, j) += dz * t[j];
          transform_backward(fuser.heads[j], caches[j], rule, dz * fuser.w.value(0, j));
        }
      }
      opt.step();
    }
  }
  return fuser;
}

}  // namespace umre
