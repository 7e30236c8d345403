#include "umre/encoder.hpp"

#include <cmath>
#include <cstring>

namespace umre {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y (1 x out) = x (1 x in) * W (in x out) + y
void addmv(const double* x, const Tensor2& w, double* y) {
  for (int k = 0; k < w.rows; ++k) {
    const double xv = x[k];
    if (xv == 0.0) continue;
    const double* wk = w.row_ptr(k);
    for (int j = 0; j < w.cols; ++j) y[j] += xv * wk[j];
  }
}

// dW += x^T d; dx += d W^T
void addmv_backward(const double* x, Parameter& w, const double* d, double* dx) {
  for (int k = 0; k < w.value.rows; ++k) {
    const double* wk = w.value.row_ptr(k);
    double* gk = w.grad.row_ptr(k);
    double acc = 0.0;
    for (int j = 0; j < w.value.cols; ++j) {
      gk[j] += x[k] * d[j];
      acc += wk[j] * d[j];
    }
    dx[k] += acc;
  }
}
}  // namespace

EmbeddingTable EmbeddingTable::make(Rng& rng, const std::string& name, int vocab, int dim,
                                    double scale) {
  require(vocab >= 1 && dim >= 1, "EmbeddingTable: bad shape");
  EmbeddingTable t;
  t.table = Parameter(name, vocab, dim);
  for (int r = 1; r < vocab; ++r)
    for (int c = 0; c < dim; ++c) t.table.value(r, c) = rng.uniform(-scale, scale);
  return t;  // row 0 stays zero: padding
}

const double* EmbeddingTable::row(long long id) const {
  require(id >= 0 && id < vocab(), "embedding id out of vocab range");
  return table.value.row_ptr(static_cast<int>(id));
}

void EmbeddingTable::accumulate(long long id, const double* grad) {
  require(id >= 0 && id < vocab(), "embedding id out of vocab range");
  if (id == 0) return;  // padding row is never updated
  double* g = table.grad.row_ptr(static_cast<int>(id));
  for (int c = 0; c < dim(); ++c) g[c] += grad[c];
}

ParamRefs EmbeddingTables::params() {
  return {&item.table, &category.table, &action.table};
}

Tensor2 embed_sequence(std::span<const BehaviorEvent> events, const EmbeddingTables& tables) {
  require(events.size() <= kMaxHistory, "embed_sequence: history longer than 30");
  const int d_i = tables.item.dim(), d_c = tables.category.dim(), d_a = tables.action.dim();
  Tensor2 rows(static_cast<int>(events.size()), d_i + d_c + d_a);
  for (size_t t = 0; t < events.size(); ++t) {
    double* out = rows.row_ptr(static_cast<int>(t));
    std::memcpy(out, tables.item.row(events[t].item_id), sizeof(double) * d_i);
    std::memcpy(out + d_i, tables.category.row(events[t].category_id), sizeof(double) * d_c);
    std::memcpy(out + d_i + d_c, tables.action.row(events[t].action_type), sizeof(double) * d_a);
  }
  return rows;
}

void embed_sequence_backward(std::span<const BehaviorEvent> events, EmbeddingTables& tables,
                             const Tensor2& d_rows) {
  require(d_rows.rows == static_cast<int>(events.size()), "embed_sequence_backward: row mismatch");
  const int d_i = tables.item.dim(), d_c = tables.category.dim();
  for (size_t t = 0; t < events.size(); ++t) {
    const double* d = d_rows.row_ptr(static_cast<int>(t));
    tables.item.accumulate(events[t].item_id, d);
    tables.category.accumulate(events[t].category_id, d + d_i);
    tables.action.accumulate(events[t].action_type, d + d_i + d_c);
  }
}

GruCell GruCell::make(Rng& rng, const std::string& prefix, int in_dim, int hidden) {
  require(in_dim > 0 && hidden > 0, "GruCell: bad dims");
  GruCell c;
  c.in_dim = in_dim;
  c.hidden = hidden;
  auto mk_w = [&](const char* tag) {
    Parameter p(prefix + "." + tag, in_dim, hidden);
    glorot_init(rng, p.value, in_dim, hidden);
    return p;
  };
  auto mk_u = [&](const char* tag) {
    Parameter p(prefix + "." + tag, hidden, hidden);
    glorot_init(rng, p.value, hidden, hidden);
    return p;
  };
  c.wz = mk_w("wz"); c.uz = mk_u("uz"); c.bz = Parameter(prefix + ".bz", 1, hidden);
  c.wr = mk_w("wr"); c.ur = mk_u("ur"); c.br = Parameter(prefix + ".br", 1, hidden);
  c.wn = mk_w("wn"); c.un = mk_u("un"); c.bn = Parameter(prefix + ".bn", 1, hidden);
  return c;
}

ParamRefs GruCell::params() {
  return {&wz, &uz, &bz, &wr, &ur, &br, &wn, &un, &bn};
}

std::vector<double> gru_forward(const GruCell& cell, const Tensor2& rows, GruCache* cache) {
  require(rows.rows == 0 || rows.cols == cell.in_dim, "gru_forward: input width mismatch");
  const int hdim = cell.hidden;
  const int steps = rows.rows;
  std::vector<double> h(hdim, 0.0);
  if (cache) {
    cache->xs = rows;
    cache->h.assign(1, h);
    cache->z.clear(); cache->r.clear(); cache->n.clear(); cache->un_h.clear();
  }
  std::vector<double> z(hdim), r(hdim), n(hdim), un_h(hdim);
  for (int t = 0; t < steps; ++t) {
    const double* x = rows.row_ptr(t);
    std::vector<double> az(cell.bz.value.data), ar(cell.br.value.data), an(cell.bn.value.data);
    addmv(x, cell.wz.value, az.data());
    addmv(h.data(), cell.uz.value, az.data());
    addmv(x, cell.wr.value, ar.data());
    addmv(h.data(), cell.ur.value, ar.data());
    addmv(x, cell.wn.value, an.data());
    std::fill(un_h.begin(), un_h.end(), 0.0);
    addmv(h.data(), cell.un.value, un_h.data());
    for (int j = 0; j < hdim; ++j) {
      z[j] = sigmoid(az[j]);
      r[j] = sigmoid(ar[j]);
      n[j] = std::tanh(an[j] + r[j] * un_h[j]);
      h[j] = (1.0 - z[j]) * n[j] + z[j] * h[j];
    }
    if (cache) {
      cache->z.push_back(z);
      cache->r.push_back(r);
      cache->n.push_back(n);
      cache->un_h.push_back(un_h);
      cache->h.push_back(h);
    }
  }
  return h;
}

Tensor2 gru_backward(GruCell& cell, const GruCache& cache, std::span<const double> d_h_final) {
  const int hdim = cell.hidden;
  const int steps = cache.xs.rows;
  require(static_cast<int>(d_h_final.size()) == hdim, "gru_backward: grad width mismatch");
  Tensor2 d_rows(steps, cache.xs.cols);
  std::vector<double> dh(d_h_final.begin(), d_h_final.end());
  std::vector<double> da_z(hdim), da_r(hdim), da_n(hdim), d_unh(hdim), dh_prev(hdim);
  for (int t = steps - 1; t >= 0; --t) {
    const auto& z = cache.z[t];
    const auto& r = cache.r[t];
    const auto& n = cache.n[t];
    const auto& un_h = cache.un_h[t];
    const auto& h_prev = cache.h[t];
    for (int j = 0; j < hdim; ++j) {
      const double dz = dh[j] * (h_prev[j] - n[j]);
      const double dn = dh[j] * (1.0 - z[j]);
      da_n[j] = dn * (1.0 - n[j] * n[j]);
      const double dr = da_n[j] * un_h[j];
      d_unh[j] = da_n[j] * r[j];
      da_r[j] = dr * r[j] * (1.0 - r[j]);
      da_z[j] = dz * z[j] * (1.0 - z[j]);
      dh_prev[j] = dh[j] * z[j];
      cell.bz.grad.data[j] += da_z[j];
      cell.br.grad.data[j] += da_r[j];
      cell.bn.grad.data[j] += da_n[j];
    }
    const double* x = cache.xs.row_ptr(t);
    double* dx = d_rows.row_ptr(t);
    addmv_backward(x, cell.wz, da_z.data(), dx);
    addmv_backward(x, cell.wr, da_r.data(), dx);
    addmv_backward(x, cell.wn, da_n.data(), dx);
    addmv_backward(h_prev.data(), cell.uz, da_z.data(), dh_prev.data());
    addmv_backward(h_prev.data(), cell.ur, da_r.data(), dh_prev.data());
    addmv_backward(h_prev.data(), cell.un, d_unh.data(), dh_prev.data());
    dh = dh_prev;
  }
  return d_rows;
}

}  // namespace umre
