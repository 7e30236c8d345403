#include "umre/fusion.hpp"

#include <cmath>

namespace umre {

TaskEmbeddingTable TaskEmbeddingTable::make(Rng& rng, int num_tasks, int dim) {
  require(num_tasks >= 1 && dim >= 1, "TaskEmbeddingTable: bad shape");
  TaskEmbeddingTable t;
  t.table = Parameter("fusion.task_emb", num_tasks, dim);
  glorot_init(rng, t.table.value, num_tasks, dim);
  return t;
}

Tensor2 build_task_embeddings(std::span<const double> t, const TaskEmbeddingTable& table) {
  require(static_cast<int>(t.size()) == table.num_tasks(),
          "build_task_embeddings: score count != K");
  Tensor2 rows(table.num_tasks(), table.dim());
  for (int k = 0; k < table.num_tasks(); ++k) {
    const double* e = table.table.value.row_ptr(k);
    double* out = rows.row_ptr(k);
    for (int c = 0; c < table.dim(); ++c) out[c] = t[k] * e[c];
  }
  return rows;
}

void build_task_embeddings_backward(std::span<const double> t, TaskEmbeddingTable& table,
                                    const Tensor2& d_rows, std::span<double> d_t) {
  require(d_rows.rows == table.num_tasks() && d_rows.cols == table.dim(),
          "build_task_embeddings_backward: shape mismatch");
  for (int k = 0; k < table.num_tasks(); ++k) {
    const double* e = table.table.value.row_ptr(k);
    double* ge = table.table.grad.row_ptr(k);
    const double* d = d_rows.row_ptr(k);
    double acc = 0.0;
    for (int c = 0; c < table.dim(); ++c) {
      ge[c] += t[k] * d[c];
      acc += e[c] * d[c];
    }
    d_t[k] += acc;
  }
}

AttentionBlock AttentionBlock::make(Rng& rng, const std::string& prefix, int query_dim,
                                    int kv_dim, int d_k) {
  require(query_dim >= 1 && kv_dim >= 1 && d_k >= 1, "AttentionBlock: bad dims");
  AttentionBlock b;
  b.d_k = d_k;
  b.wq = Parameter(prefix + ".wq", query_dim, d_k);
  b.wk = Parameter(prefix + ".wk", kv_dim, d_k);
  b.wv = Parameter(prefix + ".wv", kv_dim, d_k);
  glorot_init(rng, b.wq.value, query_dim, d_k);
  glorot_init(rng, b.wk.value, kv_dim, d_k);
  glorot_init(rng, b.wv.value, kv_dim, d_k);
  return b;
}

ParamRefs AttentionBlock::params() { return {&wq, &wk, &wv}; }

std::vector<double> cross_attention(const AttentionBlock& block, std::span<const double> query,
                                    const Tensor2& keys_values, AttnCache* cache) {
  require(keys_values.rows >= 1, "cross_attention: keys/values must have at least one row");
  require(static_cast<int>(query.size()) == block.wq.value.rows,
          "cross_attention: query dim mismatch");
  require(keys_values.cols == block.wk.value.rows, "cross_attention: key dim mismatch");

  Tensor2 q_row(1, static_cast<int>(query.size()));
  std::copy(query.begin(), query.end(), q_row.data.begin());
  Parameter no_bias_q("", 1, block.d_k), no_bias_kv("", 1, block.d_k);
  const Tensor2 qp = linear_forward(q_row, block.wq, no_bias_q);
  const Tensor2 kp = linear_forward(keys_values, block.wk, no_bias_kv);
  const Tensor2 vp = linear_forward(keys_values, block.wv, no_bias_kv);

  const double scale = 1.0 / std::sqrt(static_cast<double>(block.d_k));
  Tensor2 logits(1, kp.rows);
  for (int r = 0; r < kp.rows; ++r) {
    double dot = 0.0;
    for (int c = 0; c < block.d_k; ++c) dot += qp(0, c) * kp(r, c);
    logits(0, r) = dot * scale;
  }
  const Tensor2 attn = softmax_rows(logits);

  std::vector<double> out(static_cast<size_t>(block.d_k), 0.0);
  for (int r = 0; r < vp.rows; ++r) {
    const double a = attn(0, r);
    const double* v = vp.row_ptr(r);
    for (int c = 0; c < block.d_k; ++c) out[c] += a * v[c];
  }

  if (cache) {
    cache->query.assign(query.begin(), query.end());
    cache->kv = keys_values;
    cache->qp = qp;
    cache->kp = kp;
    cache->vp = vp;
    cache->attn = attn;
  }
  return out;
}

AttnInputGrads cross_attention_backward(AttentionBlock& block, const AttnCache& cache,
                                        std::span<const double> d_out) {
  const int rows = cache.kv.rows;
  const int dk = block.d_k;
  require(static_cast<int>(d_out.size()) == dk, "cross_attention_backward: grad dim mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  // out = attn * Vp
  Tensor2 d_vp(rows, dk);
  Tensor2 d_attn(1, rows);
  for (int r = 0; r < rows; ++r) {
    const double a = cache.attn(0, r);
    const double* v = cache.vp.row_ptr(r);
    double acc = 0.0;
    double* dv = d_vp.row_ptr(r);
    for (int c = 0; c < dk; ++c) {
      dv[c] = a * d_out[c];
      acc += v[c] * d_out[c];
    }
    d_attn(0, r) = acc;
  }

  const Tensor2 d_logits = softmax_rows_backward(cache.attn, d_attn);

  Tensor2 d_qp(1, dk);
  Tensor2 d_kp(rows, dk);
  for (int r = 0; r < rows; ++r) {
    const double dl = d_logits(0, r) * scale;
    const double* k_row = cache.kp.row_ptr(r);
    double* dk_row = d_kp.row_ptr(r);
    for (int c = 0; c < dk; ++c) {
      d_qp(0, c) += dl * k_row[c];
      dk_row[c] = dl * cache.qp(0, c);
    }
  }

  Tensor2 q_row(1, static_cast<int>(cache.query.size()));
  std::copy(cache.query.begin(), cache.query.end(), q_row.data.begin());
  Parameter b_sink_q("", 1, dk), b_sink_kv("", 1, dk);
  const Tensor2 d_query = linear_backward(q_row, block.wq, b_sink_q, d_qp);
  Tensor2 d_kv = linear_backward(cache.kv, block.wk, b_sink_kv, d_kp);
  const Tensor2 d_kv_v = linear_backward(cache.kv, block.wv, b_sink_kv, d_vp);
  for (size_t i = 0; i < d_kv.data.size(); ++i) d_kv.data[i] += d_kv_v.data[i];

  AttnInputGrads grads;
  grads.d_query = d_query.row_vec(0);
  grads.d_kv = std::move(d_kv);
  return grads;
}

WeightHead WeightHead::make(Rng& rng, int in_dim, int num_tasks, bool softmax) {
  WeightHead h;
  h.w = Parameter("fusion.head.w", in_dim, num_tasks);
  h.b = Parameter("fusion.head.b", 1, num_tasks);
  glorot_init(rng, h.w.value, in_dim, num_tasks);
  h.softmax = softmax;
  return h;
}

ParamRefs WeightHead::params() { return {&w, &b}; }

std::vector<double> fusion_weights(const WeightHead& head, std::span<const double> u,
                                   std::span<const double> a1, std::span<const double> a2,
                                   WeightHeadCache* cache) {
  const int in_dim = head.w.value.rows;
  require(static_cast<int>(u.size() + a1.size() + a2.size()) == in_dim,
          "fusion_weights: concat dim mismatch");
  Tensor2 input(1, in_dim);
  double* x = input.row_ptr(0);
  std::copy(u.begin(), u.end(), x);
  std::copy(a1.begin(), a1.end(), x + u.size());
  std::copy(a2.begin(), a2.end(), x + u.size() + a1.size());

  const Tensor2 pre = linear_forward(input, head.w, head.b);
  const Tensor2 out = head.softmax ? softmax_rows(pre) : pre;
  if (cache) {
    cache->input = input;
    cache->pre = pre;
    cache->out = out;
  }
  return out.row_vec(0);
}

std::vector<double> fusion_weights_backward(WeightHead& head, const WeightHeadCache& cache,
                                            std::span<const double> d_w) {
  Tensor2 d(1, static_cast<int>(d_w.size()));
  std::copy(d_w.begin(), d_w.end(), d.data.begin());
  if (head.softmax) d = softmax_rows_backward(cache.out, d);
  const Tensor2 d_input = linear_backward(cache.input, head.w, head.b, d);
  return d_input.row_vec(0);
}

double fuse(std::span<const double> w, std::span<const double> t) {
  require(w.size() == t.size(), "fuse: weight/score length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < w.size(); ++i) s += w[i] * t[i];
  return s;
}

}  // namespace umre
