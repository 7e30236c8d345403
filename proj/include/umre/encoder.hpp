#pragma once

#include <span>
#include <vector>

#include "umre/nn.hpp"
#include "umre/tensor.hpp"

namespace umre {

// Appendix-B history cap
inline constexpr int kMaxHistory = 30;

struct BehaviorEvent {
  long long item_id = 0;
  int category_id = 0;
  int action_type = 0;
};

// Lookup table with row 0 reserved as all-zero padding; that row never
// receives gradient.
struct EmbeddingTable {
  Parameter table;  // vocab x dim

  static EmbeddingTable make(Rng& rng, const std::string& name, int vocab, int dim,
                             double scale = 0.1);
  int vocab() const { return table.value.rows; }
  int dim() const { return table.value.cols; }
  const double* row(long long id) const;
  void accumulate(long long id, const double* grad);  // no-op for id 0
};

struct EmbeddingTables {
  EmbeddingTable item;
  EmbeddingTable category;
  EmbeddingTable action;
  int event_dim() const { return item.dim() + category.dim() + action.dim(); }
  ParamRefs params();
};

// Row t = item_emb ++ category_emb ++ action_emb of event t. Empty history
// gives a 0 x 3d matrix. Out-of-vocab ids error.
Tensor2 embed_sequence(std::span<const BehaviorEvent> events, const EmbeddingTables& tables);
void embed_sequence_backward(std::span<const BehaviorEvent> events, EmbeddingTables& tables,
                             const Tensor2& d_rows);

// Single-layer GRU, row-vector convention (x: 1 x in, h: 1 x H):
//   z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
//   r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
//   n_t = tanh(x_t Wn + r_t * (h_{t-1} Un) + bn)
//   h_t = (1 - z_t) * n_t + z_t * h_{t-1}
struct GruCell {
  Parameter wz, uz, bz;
  Parameter wr, ur, br;
  Parameter wn, un, bn;
  int in_dim = 0;
  int hidden = 0;

  static GruCell make(Rng& rng, const std::string& prefix, int in_dim, int hidden);
  ParamRefs params();
};

struct GruCache {
  Tensor2 xs;
  std::vector<std::vector<double>> h;  // h[0] = 0, h[t] after step t
  std::vector<std::vector<double>> z, r, n, un_h;
};

// Processes exactly the given rows (no padding steps); empty input returns
// the zero initial state.
std::vector<double> gru_forward(const GruCell& cell, const Tensor2& rows,
                                GruCache* cache = nullptr);

// BPTT from the final hidden state; accumulates cell grads, returns d_rows.
Tensor2 gru_backward(GruCell& cell, const GruCache& cache, std::span<const double> d_h_final);

}  // namespace umre
