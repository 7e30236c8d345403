#include "umre/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "umre/checkpoint.hpp"
#include "umre/errors.hpp"

namespace umre {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::vector<RawInteraction> flatten(const std::vector<Session>& sessions) {
  std::vector<RawInteraction> records;
  for (const Session& s : sessions)
    records.insert(records.end(), s.records.begin(), s.records.end());
  return records;
}

RankedSession rank_by_scores(const Session& session, const std::vector<double>& scores) {
  std::vector<RankedItem> items;
  items.reserve(session.records.size());
  for (size_t j = 0; j < session.records.size(); ++j)
    items.push_back({session.records[j].item_id, scores[j], session.records[j].labels});
  return RankedSession::from_unsorted(std::move(items));
}

template <class ScoreFn>
MetricReport report_for(const std::vector<Session>& sessions, int num_tasks, int k,
                        ScoreFn&& score_record) {
  std::vector<std::pair<long long, RankedSession>> ranked;
  ranked.reserve(sessions.size());
  for (const Session& s : sessions) {
    std::vector<double> scores(s.records.size());
    for (size_t j = 0; j < s.records.size(); ++j) scores[j] = score_record(s, j);
    ranked.emplace_back(s.user_id, rank_by_scores(s, scores));
  }
  return evaluate_ranked(ranked, num_tasks, k);
}

FormulaParams formula_params(const PipelineContext& ctx, const std::string& prefix,
                             int num_tasks) {
  FormulaParams p;
  auto read = [&](const char* field) {
    const std::string key = prefix + "_" + field;
    if (!ctx.cfg.has("baselines", key))
      throw ConfigError("formula baseline requested but [baselines] " + key + " missing");
    std::vector<double> v = ctx.cfg.get_double_list("baselines", key);
    if (static_cast<int>(v.size()) == 1) v.assign(static_cast<size_t>(num_tasks), v[0]);
    if (static_cast<int>(v.size()) != num_tasks)
      throw ConfigError("[baselines] " + key + ": need 1 or num_tasks values");
    return v;
  };
  p.w = read("w");
  p.alpha = read("alpha");
  p.b = read("b");
  p.beta = read("beta");
  return p;
}

void print_report_table(std::ostream& out, const std::string& model,
                        const MetricReport& report,
                        const std::vector<std::string>& task_names) {
  out << std::left << std::setw(28) << model;
  out << std::fixed << std::setprecision(4);
  for (size_t t = 0; t < report.tasks.size(); ++t) out << " " << report.tasks[t].ndcg;
  out << "  | mean " << report.mean_ndcg() << "\n";
  out.unsetf(std::ios::fixed);
  out << std::setprecision(6);
  (void)task_names;
}

}  // namespace

PipelineContext PipelineContext::resolve(const Config& cfg) {
  PipelineContext ctx;
  ctx.cfg = cfg;
  ctx.seed = static_cast<uint64_t>(cfg.get_int("run", "seed", 0));
  ctx.out_dir = cfg.get_str("run", "out_dir", "out");
  fs::create_directories(ctx.out_dir);
  std::string path = cfg.get_str("data", "path", "synth.jsonl");
  if (fs::path(path).is_relative()) path = (fs::path(ctx.out_dir) / path).string();
  ctx.data_path = path;
  if (cfg.has("data", "task_names")) ctx.task_names = cfg.get_str_list("data", "task_names");
  return ctx;
}

std::string PipelineContext::out_path(const std::string& name) const {
  return (fs::path(out_dir) / name).string();
}

SyntheticConfig synth_config(const PipelineContext& ctx) {
  const Config& cfg = ctx.cfg;
  SyntheticConfig sc;
  sc.users = static_cast<int>(cfg.get_int("synth", "users", sc.users));
  sc.items = static_cast<int>(cfg.get_int("synth", "items", sc.items));
  sc.categories = static_cast<int>(cfg.get_int("synth", "categories", sc.categories));
  sc.tasks = static_cast<int>(cfg.get_int("synth", "tasks", sc.tasks));
  if (cfg.has("synth", "target_rates"))
    sc.target_rates = cfg.get_double_list("synth", "target_rates");
  else
    sc.target_rates.assign(static_cast<size_t>(sc.tasks), 0.1);
  if (cfg.has("synth", "slopes")) sc.slopes = cfg.get_double_list("synth", "slopes");
  sc.latent_dim = static_cast<int>(cfg.get_int("synth", "latent_dim", sc.latent_dim));
  sc.noise = cfg.get_double("synth", "noise", sc.noise);
  sc.sessions_per_user =
      static_cast<int>(cfg.get_int("synth", "sessions_per_user", sc.sessions_per_user));
  sc.session_len = static_cast<int>(cfg.get_int("synth", "session_len", sc.session_len));
  sc.use_warps = cfg.get_bool("synth", "warps", sc.use_warps);
  const std::string mode = cfg.get_str("synth", "label_mode", "bernoulli");
  if (mode == "bernoulli")
    sc.label_mode = LabelMode::kBernoulli;
  else if (mode == "threshold")
    sc.label_mode = LabelMode::kThreshold;
  else
    throw ConfigError("[synth] label_mode must be bernoulli or threshold");
  sc.seed = ctx.seed;
  return sc;
}

LoadedData load_and_split(const PipelineContext& ctx) {
  LoadedData data;
  data.records = load_dataset(ctx.data_path);
  if (data.records.empty()) throw DataError("dataset is empty: " + ctx.data_path);
  data.num_tasks = static_cast<int>(data.records.front().labels.size());
  const long long window = ctx.cfg.get_int("data", "session_window_s", 3600);
  const int min_records = static_cast<int>(ctx.cfg.get_int("data", "min_session", 20));
  const int max_history = static_cast<int>(ctx.cfg.get_int("data", "max_history", kMaxHistory));
  std::vector<Session> sessions =
      segment_sessions(data.records, window, min_records, max_history);
  if (sessions.empty()) throw DataError("no sessions survive segmentation");
  std::vector<double> ratios{0.8, 0.1, 0.1};
  if (ctx.cfg.has("data", "split")) ratios = ctx.cfg.get_double_list("data", "split");
  data.splits = split_sessions(std::move(sessions), ratios, ctx.seed);
  return data;
}

ModelConfig model_config(const PipelineContext& ctx, std::span<const RawInteraction> records) {
  const Config& cfg = ctx.cfg;
  ModelConfig mc;
  mc.num_tasks = static_cast<int>(records.front().labels.size());
  long long max_item = 1, max_cat = 1;
  for (const RawInteraction& r : records) {
    max_item = std::max(max_item, r.item_id);
    max_cat = std::max<long long>(max_cat, r.category_id);
  }
  mc.item_vocab = static_cast<int>(max_item + 1);
  mc.category_vocab = static_cast<int>(max_cat + 1);
  mc.action_vocab = mc.num_tasks + 2;
  mc.hist_emb_dim = static_cast<int>(cfg.get_int("model", "hist_emb_dim", mc.hist_emb_dim));
  mc.gru_hidden = static_cast<int>(cfg.get_int("model", "gru_hidden", mc.gru_hidden));
  mc.item_ctx_dim = static_cast<int>(cfg.get_int("model", "item_ctx_dim", mc.item_ctx_dim));
  mc.umnn_hidden = static_cast<int>(cfg.get_int("model", "umnn_hidden", mc.umnn_hidden));
  mc.umnn_depth = static_cast<int>(cfg.get_int("model", "umnn_depth", mc.umnn_depth));
  mc.pos_dim = static_cast<int>(cfg.get_int("model", "pos_dim", mc.pos_dim));
  mc.task_emb_dim = static_cast<int>(cfg.get_int("model", "task_emb_dim", mc.task_emb_dim));
  mc.d_k = static_cast<int>(cfg.get_int("model", "d_k", mc.d_k));
  mc.quad_nodes = static_cast<int>(cfg.get_int("model", "quad_nodes", mc.quad_nodes));
  const std::string weights = cfg.get_str("model", "weights", "linear");
  if (weights == "softmax")
    mc.softmax_weights = true;
  else if (weights != "linear")
    throw ConfigError("[model] weights must be linear or softmax");
  const std::string cemb = cfg.get_str("model", "cemb", "candidate");
  if (cemb == "history")
    mc.cemb_history = true;
  else if (cemb != "candidate")
    throw ConfigError("[model] cemb must be candidate or history");
  return mc;
}

TrainSettings train_settings(const PipelineContext& ctx) {
  const Config& cfg = ctx.cfg;
  TrainSettings ts;
  ts.seed = ctx.seed;
  ts.batch_sessions = static_cast<int>(cfg.get_int("train", "batch_sessions", 16));
  ts.adam.lr = cfg.get_double("train", "lr", 1e-3);
  ts.adam.weight_decay = cfg.get_double("train", "weight_decay", 1e-4);
  ts.pareto.gamma = cfg.get_double("pareto", "gamma", 0.5);
  ts.pareto.warmup = static_cast<int>(cfg.get_int("pareto", "warmup", 2));
  ts.pareto.omega_min = cfg.get_double("pareto", "omega_min", 0.05);
  ts.pareto.omega_max = cfg.get_double("pareto", "omega_max", 0.8);
  ts.pareto.eps = cfg.get_double("pareto", "eps", 1e-3);
  ts.max_epochs = static_cast<int>(cfg.get_int("train", "epochs", 30));
  ts.pareto.max_epochs = ts.max_epochs;
  ts.pareto_enabled = cfg.get_bool("pareto", "enabled", true);
  const std::string variant = cfg.get_str("pareto", "variant", "eq9");
  if (variant == "literal-alg1")
    ts.pareto.literal_alg1 = true;
  else if (variant != "eq9")
    throw ConfigError("[pareto] variant must be eq9 or literal-alg1");
  return ts;
}

BaselineTrainConfig baseline_config(const PipelineContext& ctx) {
  const Config& cfg = ctx.cfg;
  BaselineTrainConfig bc;
  bc.click_task = static_cast<int>(cfg.get_int("baselines", "click_task", 0));
  bc.iterations = static_cast<int>(cfg.get_int("baselines", "iterations", 400));
  bc.lr = cfg.get_double("baselines", "lr", 0.05);
  bc.seed = static_cast<uint64_t>(cfg.get_int("baselines", "seed", 1));
  bc.umnn_epochs = static_cast<int>(cfg.get_int("baselines", "umnn_epochs", 6));
  bc.umnn_batch = static_cast<int>(cfg.get_int("baselines", "umnn_batch", 256));
  bc.umnn_lr = cfg.get_double("baselines", "umnn_lr", 5e-3);
  bc.umnn_hidden = static_cast<int>(cfg.get_int("baselines", "umnn_hidden", 24));
  bc.umnn_depth = static_cast<int>(cfg.get_int("baselines", "umnn_depth", 3));
  bc.quad_nodes = static_cast<int>(cfg.get_int("baselines", "quad_nodes", 16));
  return bc;
}

void run_synth(const Config& cfg, std::ostream& out) {
  PipelineContext ctx = PipelineContext::resolve(cfg);
  const SyntheticConfig sc = synth_config(ctx);
  const std::vector<RawInteraction> records = generate_synthetic(sc);
  fs::create_directories(fs::path(ctx.data_path).parent_path());
  save_dataset(ctx.data_path, records);
  const std::vector<double> rates = positive_rates(records);
  out << "wrote " << records.size() << " interactions to " << ctx.data_path << "\n";
  for (size_t t = 0; t < rates.size(); ++t) {
    const std::string name =
        t < ctx.task_names.size() ? ctx.task_names[t] : "task" + std::to_string(t);
    out << "  " << name << ": positive rate " << format_double(rates[t]) << " (target "
        << sc.target_rates[t] << ")\n";
  }
}

void run_train(const Config& cfg, std::ostream& out) {
  PipelineContext ctx = PipelineContext::resolve(cfg);
  const LoadedData data = load_and_split(ctx);
  ModelConfig mc = model_config(ctx, data.records);
  UmreModel model(mc, ctx.seed);
  const TrainSettings ts = train_settings(ctx);

  const TrainResult result = train_model(model, data.splits.train, data.splits.valid, ts);
  for (const EpochLog& log : result.trace) {
    out << "epoch " << log.epoch << " loss " << format_double(log.train_loss) << " uauc";
    for (double u : log.uauc) out << " " << format_double(u);
    out << "\n";
  }
  if (result.converged_early) out << "stopped early: weight movement under eps\n";

  nlohmann::ordered_json meta;
  meta["final_omega"] = result.final_omega;
  meta["task_names"] = ctx.task_names;
  model.save(ctx.out_path("checkpoint.json"), meta);

  nlohmann::ordered_json log_json;
  log_json["task_names"] = ctx.task_names;
  log_json["epochs_run"] = result.epochs_run;
  log_json["converged_early"] = result.converged_early;
  log_json["final_omega"] = result.final_omega;
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const EpochLog& log : result.trace) {
    epochs.push_back({{"epoch", log.epoch},
                      {"loss", log.train_loss},
                      {"omega", log.omega},
                      {"uauc", log.uauc}});
  }
  log_json["epochs"] = std::move(epochs);
  write_json_file(ctx.out_path("train_log.json"), log_json);

  std::ofstream trace(ctx.out_path("pareto_trace.csv"));
  trace << "epoch,task,omega,uauc\n";
  for (const EpochLog& log : result.trace)
    for (size_t t = 0; t < log.omega.size(); ++t)
      trace << log.epoch << "," << t << "," << format_double(log.omega[t]) << ","
            << format_double(log.uauc[t]) << "\n";
  out << "checkpoint: " << ctx.out_path("checkpoint.json") << "\n";
}

void run_eval(const Config& cfg, std::ostream& out) {
  PipelineContext ctx = PipelineContext::resolve(cfg);
  const LoadedData data = load_and_split(ctx);
  const int k = static_cast<int>(cfg.get_int("eval", "k", 3));
  const std::string ckpt_path =
      cfg.get_str("eval", "checkpoint", ctx.out_path("checkpoint.json"));
  UmreModel model = UmreModel::load(ckpt_path);
  if (model.config().num_tasks != data.num_tasks)
    throw ConfigError("task-count mismatch: checkpoint has " +
                      std::to_string(model.config().num_tasks) + " tasks, dataset has " +
                      std::to_string(data.num_tasks));

  if (data.splits.test.empty()) throw DataError("test split is empty; adjust [data] split");
  const std::vector<Session>& test = data.splits.test;
  std::vector<std::string> names = ctx.task_names;
  while (static_cast<int>(names.size()) < data.num_tasks)
    names.push_back("task" + std::to_string(names.size()));

  nlohmann::ordered_json models_json;
  out << "NDCG@" << k << " per task (" << test.size() << " test sessions)\n";

  // UMRE: score per session with the shared user embedding
  std::vector<std::pair<long long, RankedSession>> umre_ranked;
  for (const Session& s : test)
    umre_ranked.emplace_back(s.user_id, rank_by_scores(s, model.forward_session(s)));
  const MetricReport umre_report = evaluate_ranked(umre_ranked, data.num_tasks, k);
  models_json["umre"] = umre_report.to_json(names);
  print_report_table(out, "umre", umre_report, names);

  const std::vector<std::string> baselines =
      cfg.has("eval", "baselines") ? cfg.get_str_list("eval", "baselines")
                                   : std::vector<std::string>{"singlesort", "lr"};
  const BaselineTrainConfig bc = baseline_config(ctx);
  const std::vector<RawInteraction> train_records = flatten(data.splits.train);

  for (const std::string& name : baselines) {
    if (name == "singlesort") {
      for (int task = 0; task < data.num_tasks; ++task) {
        std::vector<std::pair<long long, RankedSession>> ranked;
        for (const Session& s : test) ranked.emplace_back(s.user_id, single_sort(s, task));
        const MetricReport r = evaluate_ranked(ranked, data.num_tasks, k);
        const std::string label = "singlesort:" + names[task];
        models_json[label] = r.to_json(names);
        print_report_table(out, label, r, names);
      }
    } else if (name == "lr") {
      const LrParams lr = train_lr(train_records, bc);
      const MetricReport r = report_for(test, data.num_tasks, k, [&](const Session& s, size_t j) {
        return lr_fuse(s.records[j].pxtrs, lr);
      });
      models_json["lr"] = r.to_json(names);
      print_report_table(out, "lr", r, names);
    } else if (name == "mlp") {
      const MlpFuser fuser = train_mlp(train_records, bc);
      const MetricReport r = report_for(test, data.num_tasks, k, [&](const Session& s, size_t j) {
        return mlp_fuse(s.records[j].pxtrs, fuser);
      });
      models_json["mlp"] = r.to_json(names);
      print_report_table(out, "mlp", r, names);
    } else if (name == "lr_umnn") {
      const LrUmnnFuser fuser = train_lr_umnn(train_records, bc);
      const MetricReport r = report_for(test, data.num_tasks, k, [&](const Session& s, size_t j) {
        return lr_umnn_score(fuser, s.records[j].pxtrs);
      });
      models_json["lr+umnn"] = r.to_json(names);
      print_report_table(out, "lr+umnn", r, names);
    } else if (name == "formula_additive") {
      const FormulaParams fp = formula_params(ctx, "additive", data.num_tasks);
      const MetricReport r = report_for(test, data.num_tasks, k, [&](const Session& s, size_t j) {
        return formula_additive(s.records[j].pxtrs, fp);
      });
      models_json["formula_additive"] = r.to_json(names);
      print_report_table(out, "formula_additive", r, names);
    } else if (name == "formula_multiplicative") {
      const FormulaParams fp = formula_params(ctx, "multiplicative", data.num_tasks);
      const MetricReport r = report_for(test, data.num_tasks, k, [&](const Session& s, size_t j) {
        return formula_multiplicative(s.records[j].pxtrs, fp);
      });
      models_json["formula_multiplicative"] = r.to_json(names);
      print_report_table(out, "formula_multiplicative", r, names);
    } else {
      throw ConfigError("unknown baseline in [eval] baselines: " + name);
    }
  }

  nlohmann::ordered_json report_json;
  report_json["k"] = k;
  report_json["task_names"] = names;
  report_json["models"] = std::move(models_json);
  write_json_file(ctx.out_path("metrics.json"), report_json);
  out << "metrics: " << ctx.out_path("metrics.json") << "\n";
}

void run_dump_transform(const Config& cfg, std::ostream& out) {
  PipelineContext ctx = PipelineContext::resolve(cfg);
  const LoadedData data = load_and_split(ctx);
  const std::string ckpt_path =
      cfg.get_str("eval", "checkpoint", ctx.out_path("checkpoint.json"));
  UmreModel model = UmreModel::load(ckpt_path);
  if (model.config().num_tasks != data.num_tasks)
    throw ConfigError("task-count mismatch between checkpoint and dataset");
  const int contexts = static_cast<int>(cfg.get_int("dump", "contexts", 4));
  const int points = 101;

  std::vector<Session> all;
  all.insert(all.end(), data.splits.train.begin(), data.splits.train.end());
  all.insert(all.end(), data.splits.valid.begin(), data.splits.valid.end());
  all.insert(all.end(), data.splits.test.begin(), data.splits.test.end());
  require(!all.empty(), "dump-transform: no sessions");

  Rng rng = Rng(ctx.seed).fork(0x64756d70);
  std::ofstream csv(ctx.out_path("transform_curves.csv"));
  csv << "task,h_id,p,g_of_p\n";
  for (int c = 0; c < contexts; ++c) {
    const Session& sess = all[rng.below(all.size())];
    const std::vector<double> u = model.user_embedding(sess);
    const std::vector<double> h = model.make_context(u, sess.records.front().item_id);
    for (int task = 0; task < model.config().num_tasks; ++task) {
      const std::vector<double> curve = model.transform_curve(task, h, points);
      for (int i = 1; i < points; ++i)
        if (!(curve[i] > curve[i - 1]))
          throw NumericError("non-monotone transform curve detected (task " +
                             std::to_string(task) + ", context " + std::to_string(c) + ")");
      for (int i = 0; i < points; ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(points - 1);
        csv << task << "," << c << "," << format_double(p) << "," << format_double(curve[i])
            << "\n";
      }
    }
  }
  out << "curves: " << ctx.out_path("transform_curves.csv") << "\n";
}

void run_pareto_trace(const Config& cfg, std::ostream& out) {
  PipelineContext ctx = PipelineContext::resolve(cfg);
  const std::string log_path = ctx.out_path("train_log.json");
  const nlohmann::json log = read_json_file(log_path);
  std::ostringstream csv;
  csv << "epoch,task,omega,uauc\n";
  for (const auto& epoch : log.at("epochs")) {
    const auto omega = epoch.at("omega").get<std::vector<double>>();
    const auto uauc_v = epoch.at("uauc").get<std::vector<double>>();
    const int e = epoch.at("epoch").get<int>();
    for (size_t t = 0; t < omega.size(); ++t)
      csv << e << "," << t << "," << format_double(omega[t]) << "," << format_double(uauc_v[t])
          << "\n";
  }
  std::ofstream file(ctx.out_path("pareto_trace.csv"));
  file << csv.str();
  out << csv.str();
}

}  // namespace umre
