#pragma once

#include <span>
#include <vector>

#include "umre/nn.hpp"
#include "umre/tensor.hpp"

namespace umre {

// K learnable task identity vectors; T_emb row k = t_k * table[k].
struct TaskEmbeddingTable {
  Parameter table;  // K x d_a

  static TaskEmbeddingTable make(Rng& rng, int num_tasks, int dim);
  int num_tasks() const { return table.value.rows; }
  int dim() const { return table.value.cols; }
};

Tensor2 build_task_embeddings(std::span<const double> t, const TaskEmbeddingTable& table);
// accumulates table grads; adds t-gradients into d_t
void build_task_embeddings_backward(std::span<const double> t, TaskEmbeddingTable& table,
                                    const Tensor2& d_rows, std::span<double> d_t);

// Single-query scaled dot-product cross-attention:
//   A = softmax(q Wq (X Wk)^T / sqrt(d_k)) X Wv
struct AttentionBlock {
  Parameter wq, wk, wv;
  int d_k = 0;

  static AttentionBlock make(Rng& rng, const std::string& prefix, int query_dim, int kv_dim,
                             int d_k);
  ParamRefs params();
};

struct AttnCache {
  std::vector<double> query;
  Tensor2 kv;
  Tensor2 qp;    // 1 x d_k
  Tensor2 kp;    // R x d_k
  Tensor2 vp;    // R x d_k
  Tensor2 attn;  // 1 x R, rows sum to 1
};

std::vector<double> cross_attention(const AttentionBlock& block, std::span<const double> query,
                                    const Tensor2& keys_values, AttnCache* cache = nullptr);

struct AttnInputGrads {
  std::vector<double> d_query;
  Tensor2 d_kv;
};

AttnInputGrads cross_attention_backward(AttentionBlock& block, const AttnCache& cache,
                                        std::span<const double> d_out);

// w = Linear(u ++ A1 ++ A2); optional softmax over the K outputs.
struct WeightHead {
  Parameter w;  // (u_dim + 2 d_k) x K
  Parameter b;  // 1 x K
  bool softmax = false;

  static WeightHead make(Rng& rng, int in_dim, int num_tasks, bool softmax);
  ParamRefs params();
};

struct WeightHeadCache {
  Tensor2 input;  // 1 x in_dim
  Tensor2 pre;    // 1 x K
  Tensor2 out;    // 1 x K
};

std::vector<double> fusion_weights(const WeightHead& head, std::span<const double> u,
                                   std::span<const double> a1, std::span<const double> a2,
                                   WeightHeadCache* cache = nullptr);

// returns d(u ++ a1 ++ a2)
std::vector<double> fusion_weights_backward(WeightHead& head, const WeightHeadCache& cache,
                                            std::span<const double> d_w);

// s = sum_k w_k t_k
double fuse(std::span<const double> w, std::span<const double> t);

}  // namespace umre
