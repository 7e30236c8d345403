#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "umre/dataset.hpp"
#include "umre/encoder.hpp"
#include "umre/fusion.hpp"
#include "umre/quadrature.hpp"
#include "umre/umnn.hpp"

namespace umre {

struct ModelConfig {
  int num_tasks = 0;
  int item_vocab = 0;
  int category_vocab = 0;
  int action_vocab = 0;
  int hist_emb_dim = 16;   // per history field
  int gru_hidden = 32;     // user embedding size
  int item_ctx_dim = 32;   // item side of the UMNN context
  int umnn_hidden = 128;
  int umnn_depth = 3;
  int pos_dim = 4;
  int task_emb_dim = 16;   // d_a
  int d_k = 16;
  int quad_nodes = 32;
  bool softmax_weights = false;
  bool cemb_history = false;  // attention-2 keys from history categories

  int context_dim() const { return gru_hidden + item_ctx_dim; }
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// The full scoring stack: history encoder -> per-task monotone transforms
// -> two cross-attentions -> weight head -> weighted sum.
class UmreModel {
 public:
  UmreModel(const ModelConfig& cfg, uint64_t seed);

  struct RecordCache {
    std::vector<double> h;
    std::vector<double> t;
    std::vector<TransformCache> transforms;
    AttnCache att1, att2;
    std::vector<double> a1, a2, w;
    WeightHeadCache head;
  };
  struct SessionCache {
    GruCache gru;
    std::vector<double> u;
    std::vector<RecordCache> records;
  };

  // One shared user embedding per session, one score per record.
  std::vector<double> forward_session(const Session& s, SessionCache* cache = nullptr) const;
  void backward_session(const Session& s, const SessionCache& cache,
                        std::span<const double> d_scores);

  // context for one candidate item given an already-encoded user
  std::vector<double> make_context(std::span<const double> u, long long item_id) const;
  std::vector<double> user_embedding(const Session& s) const;

  // g_k over uniformly spaced p in [0, 1]
  std::vector<double> transform_curve(int task, std::span<const double> h, int points = 101) const;

  ParamRefs parameters();
  const ModelConfig& config() const { return cfg_; }
  const QuadratureRule& rule() const { return *rule_; }

  void save(const std::string& path, const nlohmann::ordered_json& extra_meta = {});
  static UmreModel load(const std::string& path);
  static nlohmann::json read_meta(const std::string& path);

  EmbeddingTables tables;
  EmbeddingTable item_ctx;
  GruCell gru;
  std::vector<UmnnHead> heads;
  TaskEmbeddingTable task_emb;
  AttentionBlock att1, att2;
  WeightHead weight_head;

 private:
  ModelConfig cfg_;
  const QuadratureRule* rule_;
  Tensor2 category_rows(const Session& s, const RawInteraction& rec) const;
};

}  // namespace umre
