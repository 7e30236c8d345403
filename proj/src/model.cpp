#include "umre/model.hpp"

#include <cmath>

#include "umre/checkpoint.hpp"
#include "umre/errors.hpp"

namespace umre {

void ModelConfig::validate() const {
  require(num_tasks >= 1, "model: num_tasks must be >= 1");
  require(item_vocab >= 2 && category_vocab >= 2 && action_vocab >= 2,
          "model: vocab sizes must be >= 2 (row 0 is padding)");
  require(hist_emb_dim >= 1 && gru_hidden >= 1 && item_ctx_dim >= 0, "model: bad encoder dims");
  require(umnn_hidden >= 1 && umnn_depth >= 1 && pos_dim >= 0, "model: bad umnn dims");
  require(task_emb_dim >= 1 && d_k >= 1, "model: bad fusion dims");
  require(quad_nodes >= 8, "model: quad_nodes below the monotonicity floor of 8");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  return {{"num_tasks", num_tasks},
          {"item_vocab", item_vocab},
          {"category_vocab", category_vocab},
          {"action_vocab", action_vocab},
          {"hist_emb_dim", hist_emb_dim},
          {"gru_hidden", gru_hidden},
          {"item_ctx_dim", item_ctx_dim},
          {"umnn_hidden", umnn_hidden},
          {"umnn_depth", umnn_depth},
          {"pos_dim", pos_dim},
          {"task_emb_dim", task_emb_dim},
          {"d_k", d_k},
          {"quad_nodes", quad_nodes},
          {"softmax_weights", softmax_weights},
          {"cemb_history", cemb_history}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.num_tasks = j.at("num_tasks").get<int>();
  c.item_vocab = j.at("item_vocab").get<int>();
  c.category_vocab = j.at("category_vocab").get<int>();
  c.action_vocab = j.at("action_vocab").get<int>();
  c.hist_emb_dim = j.at("hist_emb_dim").get<int>();
  c.gru_hidden = j.at("gru_hidden").get<int>();
  c.item_ctx_dim = j.at("item_ctx_dim").get<int>();
  c.umnn_hidden = j.at("umnn_hidden").get<int>();
  c.umnn_depth = j.at("umnn_depth").get<int>();
  c.pos_dim = j.at("pos_dim").get<int>();
  c.task_emb_dim = j.at("task_emb_dim").get<int>();
  c.d_k = j.at("d_k").get<int>();
  c.quad_nodes = j.at("quad_nodes").get<int>();
  c.softmax_weights = j.at("softmax_weights").get<bool>();
  c.cemb_history = j.at("cemb_history").get<bool>();
  return c;
}

UmreModel::UmreModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  rule_ = &clenshaw_curtis_cached(cfg_.quad_nodes);
  Rng rng(splitmix64(seed ^ 0x756d7265ULL));

  Rng emb_rng = rng.fork(1);
  tables.item = EmbeddingTable::make(emb_rng, "emb.item", cfg_.item_vocab, cfg_.hist_emb_dim);
  tables.category =
      EmbeddingTable::make(emb_rng, "emb.category", cfg_.category_vocab, cfg_.hist_emb_dim);
  tables.action =
      EmbeddingTable::make(emb_rng, "emb.action", cfg_.action_vocab, cfg_.hist_emb_dim);
  if (cfg_.item_ctx_dim > 0)
    item_ctx = EmbeddingTable::make(emb_rng, "emb.item_ctx", cfg_.item_vocab, cfg_.item_ctx_dim);

  Rng gru_rng = rng.fork(2);
  gru = GruCell::make(gru_rng, "gru", tables.event_dim(), cfg_.gru_hidden);

  Rng umnn_rng = rng.fork(3);
  UmnnConfig ucfg;
  ucfg.context_dim = cfg_.context_dim();
  ucfg.hidden = cfg_.umnn_hidden;
  ucfg.depth = cfg_.umnn_depth;
  ucfg.pos_dim = cfg_.pos_dim;
  heads.reserve(cfg_.num_tasks);
  for (int k = 0; k < cfg_.num_tasks; ++k) heads.push_back(UmnnHead::make(umnn_rng, k, ucfg));

  Rng fusion_rng = rng.fork(4);
  task_emb = TaskEmbeddingTable::make(fusion_rng, cfg_.num_tasks, cfg_.task_emb_dim);
  att1 = AttentionBlock::make(fusion_rng, "att1", cfg_.gru_hidden, cfg_.task_emb_dim, cfg_.d_k);
  att2 = AttentionBlock::make(fusion_rng, "att2", cfg_.gru_hidden, cfg_.hist_emb_dim, cfg_.d_k);
  weight_head = WeightHead::make(fusion_rng, cfg_.gru_hidden + 2 * cfg_.d_k, cfg_.num_tasks,
                                 cfg_.softmax_weights);
}

std::vector<double> UmreModel::make_context(std::span<const double> u, long long item_id) const {
  std::vector<double> h(u.begin(), u.end());
  if (cfg_.item_ctx_dim > 0) {
    const double* row = item_ctx.row(item_id);
    h.insert(h.end(), row, row + cfg_.item_ctx_dim);
  }
  return h;
}

std::vector<double> UmreModel::user_embedding(const Session& s) const {
  const Tensor2 rows = embed_sequence(s.history, tables);
  return gru_forward(gru, rows);
}

Tensor2 UmreModel::category_rows(const Session& s, const RawInteraction& rec) const {
  if (cfg_.cemb_history && !s.history.empty()) {
    Tensor2 rows(static_cast<int>(s.history.size()), cfg_.hist_emb_dim);
    for (size_t t = 0; t < s.history.size(); ++t) {
      const double* src = tables.category.row(s.history[t].category_id);
      std::copy(src, src + cfg_.hist_emb_dim, rows.row_ptr(static_cast<int>(t)));
    }
    return rows;
  }
  Tensor2 rows(1, cfg_.hist_emb_dim);
  const double* src = tables.category.row(rec.category_id);
  std::copy(src, src + cfg_.hist_emb_dim, rows.row_ptr(0));
  return rows;
}

std::vector<double> UmreModel::forward_session(const Session& s, SessionCache* cache) const {
  require(!s.records.empty(), "forward_session: empty session");
  const Tensor2 rows = embed_sequence(s.history, tables);
  GruCache local_gru;
  GruCache* gru_cache = cache ? &cache->gru : &local_gru;
  const std::vector<double> u = gru_forward(gru, rows, gru_cache);
  if (cache) {
    cache->u = u;
    cache->records.clear();
    cache->records.resize(s.records.size());
  }

  std::vector<double> scores(s.records.size());
  for (size_t j = 0; j < s.records.size(); ++j) {
    const RawInteraction& rec = s.records[j];
    require(static_cast<int>(rec.pxtrs.size()) == cfg_.num_tasks,
            "forward_session: pxtr count != num_tasks");
    RecordCache local;
    RecordCache& rc = cache ? cache->records[j] : local;
    rc.h = make_context(u, rec.item_id);
    rc.t = transform_all(heads, rec.pxtrs, rc.h, *rule_, cache ? &rc.transforms : nullptr);
    const Tensor2 t_emb = build_task_embeddings(rc.t, task_emb);
    rc.a1 = cross_attention(att1, u, t_emb, cache ? &rc.att1 : nullptr);
    const Tensor2 c_emb = category_rows(s, rec);
    rc.a2 = cross_attention(att2, u, c_emb, cache ? &rc.att2 : nullptr);
    rc.w = fusion_weights(weight_head, u, rc.a1, rc.a2, cache ? &rc.head : nullptr);
    scores[j] = fuse(rc.w, rc.t);
  }
  return scores;
}

void UmreModel::backward_session(const Session& s, const SessionCache& cache,
                                 std::span<const double> d_scores) {
  require(cache.records.size() == s.records.size() && d_scores.size() == s.records.size(),
          "backward_session: cache/upstream mismatch");
  const int u_dim = cfg_.gru_hidden;
  std::vector<double> du(static_cast<size_t>(u_dim), 0.0);

  for (size_t j = 0; j < s.records.size(); ++j) {
    const RecordCache& rc = cache.records[j];
    const RawInteraction& rec = s.records[j];
    const double ds = d_scores[j];
    if (ds == 0.0) continue;

    const int k = cfg_.num_tasks;
    std::vector<double> dw(k), dt(k);
    for (int m = 0; m < k; ++m) {
      dw[m] = ds * rc.t[m];
      dt[m] = ds * rc.w[m];
    }

    // weight head
    WeightHead& wh = weight_head;
    const std::vector<double> d_concat = fusion_weights_backward(wh, rc.head, dw);
    for (int c = 0; c < u_dim; ++c) du[c] += d_concat[c];
    std::span<const double> da1(d_concat.data() + u_dim, static_cast<size_t>(cfg_.d_k));
    std::span<const double> da2(d_concat.data() + u_dim + cfg_.d_k,
                                static_cast<size_t>(cfg_.d_k));

    // attentions
    AttnInputGrads g1 = cross_attention_backward(att1, rc.att1, da1);
    for (int c = 0; c < u_dim; ++c) du[c] += g1.d_query[c];
    AttnInputGrads g2 = cross_attention_backward(att2, rc.att2, da2);
    for (int c = 0; c < u_dim; ++c) du[c] += g2.d_query[c];
    if (cfg_.cemb_history && !s.history.empty()) {
      for (size_t t = 0; t < s.history.size(); ++t)
        tables.category.accumulate(s.history[t].category_id,
                                   g2.d_kv.row_ptr(static_cast<int>(t)));
    } else {
      tables.category.accumulate(rec.category_id, g2.d_kv.row_ptr(0));
    }

    // task embeddings add into dt
    build_task_embeddings_backward(rc.t, task_emb, g1.d_kv, dt);

    // monotone transforms
    std::vector<double> dh(rc.h.size(), 0.0);
    for (int m = 0; m < k; ++m) {
      const TransformInputGrads g = transform_backward(heads[m], rc.transforms[m], *rule_, dt[m]);
      for (size_t c = 0; c < dh.size(); ++c) dh[c] += g.d_h[c];
    }
    for (int c = 0; c < u_dim; ++c) du[c] += dh[c];
    if (cfg_.item_ctx_dim > 0) item_ctx.accumulate(rec.item_id, dh.data() + u_dim);
  }

  const Tensor2 d_rows = gru_backward(gru, cache.gru, du);
  embed_sequence_backward(s.history, tables, d_rows);
}

std::vector<double> UmreModel::transform_curve(int task, std::span<const double> h,
                                               int points) const {
  require(task >= 0 && task < cfg_.num_tasks, "transform_curve: bad task");
  require(points >= 2, "transform_curve: need at least two points");
  std::vector<double> curve(points);
  for (int i = 0; i < points; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(points - 1);
    curve[i] = transform_forward(heads[task], p, h, *rule_);
  }
  return curve;
}

ParamRefs UmreModel::parameters() {
  ParamRefs refs = tables.params();
  if (cfg_.item_ctx_dim > 0) refs.push_back(&item_ctx.table);
  for (Parameter* p : gru.params()) refs.push_back(p);
  for (UmnnHead& head : heads)
    for (Parameter* p : head.params()) refs.push_back(p);
  refs.push_back(&task_emb.table);
  for (Parameter* p : att1.params()) refs.push_back(p);
  for (Parameter* p : att2.params()) refs.push_back(p);
  for (Parameter* p : weight_head.params()) refs.push_back(p);
  return refs;
}

void UmreModel::save(const std::string& path, const nlohmann::ordered_json& extra_meta) {
  nlohmann::ordered_json j;
  j["format"] = "umre-checkpoint-v1";
  j["model"] = cfg_.to_json();
  if (!extra_meta.is_null() && !extra_meta.empty()) j["meta"] = extra_meta;
  j["params"] = params_to_json(parameters());
  write_json_file(path, j);
}

UmreModel UmreModel::load(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  if (!j.contains("format") || j.at("format") != "umre-checkpoint-v1")
    throw DataError("not a umre checkpoint: " + path);
  UmreModel model(ModelConfig::from_json(j.at("model")), 0);
  params_from_json(j.at("params"), model.parameters());
  return model;
}

nlohmann::json UmreModel::read_meta(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  return j.contains("meta") ? j.at("meta") : nlohmann::json::object();
}

}  // namespace umre
