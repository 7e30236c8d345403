#include "umre/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "umre/errors.hpp"
#include "umre/rng.hpp"
#include "umre/tensor.hpp"

namespace umre {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double apply_warp(int task, double x, bool use_warps) {
  if (!use_warps) return x;
  switch (task % 3) {
    case 0:
      return x * x;
    case 1:
      return std::sqrt(x);
    default:
      return sigmoid(8.0 * (x - 0.5));  // logistic squash
  }
}

// solve mean(sigmoid(a*d + b)) = target for b by bisection
double calibrate_bias(const std::vector<double>& dots, double slope, double target) {
  double lo = -40.0, hi = 40.0;
  auto rate_at = [&](double b) {
    double s = 0.0;
    for (double d : dots) s += sigmoid(slope * d + b);
    return s / static_cast<double>(dots.size());
  };
  if (rate_at(lo) > target || rate_at(hi) < target)
    throw DataError("generate_synthetic: target rate unreachable");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct PairSchedule {
  std::vector<RawInteraction> skeleton;  // ids + timestamps, labels/pxtrs empty
  std::vector<double> dots;              // latent affinity per record
};

PairSchedule build_schedule(const SyntheticConfig& cfg) {
  Rng root(cfg.seed);
  Rng user_stream = root.fork(0x75736572);  // per-user factors
  Rng item_stream = root.fork(0x6974656d);
  Rng cat_stream = root.fork(0x63617473);
  Rng sched = root.fork(0x73636864);

  const double factor_scale = std::pow(static_cast<double>(cfg.latent_dim), -0.25);
  auto draw_factors = [&](Rng& rng, int count) {
    std::vector<std::vector<double>> f(count);
    for (auto& v : f) {
      v.resize(cfg.latent_dim);
      for (double& x : v) x = rng.normal() * factor_scale;
    }
    return f;
  };
  const auto user_f = draw_factors(user_stream, cfg.users);
  const auto item_f = draw_factors(item_stream, cfg.items);

  std::vector<int> item_cat(cfg.items);
  for (int i = 0; i < cfg.items; ++i)
    item_cat[i] = 1 + static_cast<int>(cat_stream.below(cfg.categories));

  PairSchedule out;
  for (int u = 0; u < cfg.users; ++u) {
    for (int s = 0; s < cfg.sessions_per_user; ++s) {
      const long long base_ts =
          static_cast<long long>(u) * 10'000'000 + static_cast<long long>(s) * 86'400;
      std::set<long long> taken;
      for (int j = 0; j < cfg.session_len; ++j) {
        long long item;
        do {
          item = 1 + static_cast<long long>(sched.below(cfg.items));
        } while (!taken.insert(item).second);
        RawInteraction rec;
        rec.user_id = u + 1;
        rec.item_id = item;
        rec.category_id = item_cat[item - 1];
        rec.ts = base_ts + 60LL * j;
        out.skeleton.push_back(std::move(rec));
        double dot = 0.0;
        for (int l = 0; l < cfg.latent_dim; ++l)
          dot += user_f[u][l] * item_f[item - 1][l];
        out.dots.push_back(dot);
      }
    }
  }
  return out;
}
}  // namespace

void SyntheticConfig::validate() const {
  require(users >= 1 && items >= 1 && categories >= 1 && tasks >= 1, "synth: bad counts");
  require(static_cast<int>(target_rates.size()) == tasks, "synth: need one target rate per task");
  for (double r : target_rates) require(r > 0.0 && r < 1.0, "synth: rates must lie in (0,1)");
  require(slopes.empty() || static_cast<int>(slopes.size()) == tasks,
          "synth: slopes must be empty or one per task");
  require(latent_dim >= 1, "synth: latent_dim must be >= 1");
  require(noise >= 0.0, "synth: noise must be >= 0");
  require(sessions_per_user >= 1 && session_len >= 1, "synth: bad session shape");
  require(items >= session_len, "synth: need items >= session_len for distinct items");
}

int derive_action_type(std::span<const int> labels) {
  for (size_t m = 0; m < labels.size(); ++m)
    if (labels[m] == 1) return 2 + static_cast<int>(m);
  return 1;
}

std::vector<RawInteraction> generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  PairSchedule sched = build_schedule(cfg);
  std::vector<double> slopes = cfg.slopes;
  if (slopes.empty()) {
    slopes.resize(cfg.tasks);
    for (int m = 0; m < cfg.tasks; ++m) slopes[m] = 2.0 + 0.5 * m;
  }

  Rng root(cfg.seed);
  Rng label_stream = root.fork(0x6c61626c);
  Rng noise_stream = root.fork(0x6e6f6973);

  const size_t n = sched.skeleton.size();
  std::vector<std::vector<double>> propensity(cfg.tasks, std::vector<double>(n));
  std::vector<double> thresholds(cfg.tasks, 0.0);
  for (int m = 0; m < cfg.tasks; ++m) {
    const double b = calibrate_bias(sched.dots, slopes[m], cfg.target_rates[m]);
    for (size_t i = 0; i < n; ++i) propensity[m][i] = sigmoid(slopes[m] * sched.dots[i] + b);
    if (cfg.label_mode == LabelMode::kThreshold) {
      std::vector<double> sorted = propensity[m];
      std::sort(sorted.begin(), sorted.end());
      const size_t cut = n - std::max<size_t>(1, static_cast<size_t>(
                                  std::llround(cfg.target_rates[m] * static_cast<double>(n))));
      thresholds[m] = sorted[std::min(cut, n - 1)];
    }
  }

  for (size_t i = 0; i < n; ++i) {
    RawInteraction& rec = sched.skeleton[i];
    rec.labels.resize(cfg.tasks);
    rec.pxtrs.resize(cfg.tasks);
    for (int m = 0; m < cfg.tasks; ++m) {
      const double q = propensity[m][i];
      rec.labels[m] = cfg.label_mode == LabelMode::kBernoulli
                          ? (label_stream.bernoulli(q) ? 1 : 0)
                          : (q >= thresholds[m] ? 1 : 0);
      double px = apply_warp(m, q, cfg.use_warps);
      if (cfg.noise > 0.0) px += noise_stream.uniform(-cfg.noise, cfg.noise);
      rec.pxtrs[m] = std::clamp(px, 0.0, 1.0);
    }
  }

  const std::vector<double> rates = positive_rates(sched.skeleton);
  for (int m = 0; m < cfg.tasks; ++m) {
    const double rel = std::abs(rates[m] - cfg.target_rates[m]) / cfg.target_rates[m];
    if (rel > 0.2)
      throw DataError("generate_synthetic: empirical rate for task " + std::to_string(m) +
                      " off target by " + std::to_string(rel * 100.0) + "%");
  }
  return std::move(sched.skeleton);
}

std::vector<std::vector<double>> synthetic_true_propensities(const SyntheticConfig& cfg) {
  cfg.validate();
  PairSchedule sched = build_schedule(cfg);
  std::vector<double> slopes = cfg.slopes;
  if (slopes.empty()) {
    slopes.resize(cfg.tasks);
    for (int m = 0; m < cfg.tasks; ++m) slopes[m] = 2.0 + 0.5 * m;
  }
  std::vector<std::vector<double>> propensity(cfg.tasks,
                                              std::vector<double>(sched.skeleton.size()));
  for (int m = 0; m < cfg.tasks; ++m) {
    const double b = calibrate_bias(sched.dots, slopes[m], cfg.target_rates[m]);
    for (size_t i = 0; i < sched.dots.size(); ++i)
      propensity[m][i] = sigmoid(slopes[m] * sched.dots[i] + b);
  }
  return propensity;
}

std::vector<Session> segment_sessions(std::vector<RawInteraction> interactions,
                                      long long window_s, int min_records, int max_history) {
  require(window_s > 0, "segment_sessions: window must be positive");
  require(min_records >= 1, "segment_sessions: min_records must be >= 1");
  std::sort(interactions.begin(), interactions.end(),
            [](const RawInteraction& a, const RawInteraction& b) {
              if (a.user_id != b.user_id) return a.user_id < b.user_id;
              if (a.ts != b.ts) return a.ts < b.ts;
              return a.item_id < b.item_id;
            });

  std::vector<Session> sessions;
  size_t i = 0;
  while (i < interactions.size()) {
    const long long user = interactions[i].user_id;
    size_t user_end = i;
    while (user_end < interactions.size() && interactions[user_end].user_id == user) ++user_end;

    size_t s = i;
    while (s < user_end) {
      const long long anchor = interactions[s].ts;
      size_t e = s;
      while (e < user_end && interactions[e].ts - anchor < window_s) ++e;
      if (static_cast<int>(e - s) >= min_records) {
        Session sess;
        sess.user_id = user;
        sess.records.assign(interactions.begin() + s, interactions.begin() + e);
        // history: latest prior interactions of this user, oldest first
        const size_t count = std::min(s - i, static_cast<size_t>(max_history));
        sess.history.reserve(count);
        for (size_t h = s - count; h < s; ++h) {
          BehaviorEvent ev;
          ev.item_id = interactions[h].item_id;
          ev.category_id = interactions[h].category_id;
          ev.action_type = derive_action_type(interactions[h].labels);
          sess.history.push_back(ev);
        }
        sessions.push_back(std::move(sess));
      }
      s = e;
    }
    i = user_end;
  }
  return sessions;
}

SplitResult split_sessions(std::vector<Session> sessions, const std::vector<double>& ratios,
                           uint64_t seed) {
  require(ratios.size() == 3, "split: need three ratios");
  double sum = 0.0;
  for (double r : ratios) {
    require(r >= 0.0, "split: ratios must be non-negative");
    sum += r;
  }
  require(std::abs(sum - 1.0) < 1e-9, "split: ratios must sum to 1");

  std::vector<size_t> order(sessions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const size_t n = sessions.size();
  const size_t n_train = static_cast<size_t>(std::floor(ratios[0] * static_cast<double>(n)));
  const size_t n_valid = static_cast<size_t>(std::floor(ratios[1] * static_cast<double>(n)));

  SplitResult out;
  for (size_t i = 0; i < n; ++i) {
    Session& s = sessions[order[i]];
    if (i < n_train)
      out.train.push_back(std::move(s));
    else if (i < n_train + n_valid)
      out.valid.push_back(std::move(s));
    else
      out.test.push_back(std::move(s));
  }
  if (out.train.empty()) std::cerr << "warning: empty train split\n";
  if (out.valid.empty() && ratios[1] > 0.0) std::cerr << "warning: empty validation split\n";
  if (out.test.empty() && ratios[2] > 0.0) std::cerr << "warning: empty test split\n";
  return out;
}

std::vector<RawInteraction> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  std::vector<RawInteraction> records;
  std::string line;
  size_t line_no = 0;
  size_t expected_tasks = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("parse error on line " + std::to_string(line_no) + ": " + e.what());
    }
    RawInteraction rec;
    try {
      rec.user_id = j.at("user_id").get<long long>();
      rec.item_id = j.at("item_id").get<long long>();
      rec.category_id = j.at("category_id").get<int>();
      rec.ts = j.at("ts").get<long long>();
      rec.labels = j.at("labels").get<std::vector<int>>();
      rec.pxtrs = j.at("pxtrs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("schema error on line " + std::to_string(line_no) + ": " + e.what());
    }
    if (rec.labels.size() != rec.pxtrs.size())
      throw DataError("validation error on line " + std::to_string(line_no) +
                      ": labels/pxtrs length mismatch");
    if (expected_tasks == 0) expected_tasks = rec.labels.size();
    if (rec.labels.size() != expected_tasks)
      throw DataError("validation error on line " + std::to_string(line_no) +
                      ": inconsistent task count");
    for (int y : rec.labels)
      if (y != 0 && y != 1)
        throw DataError("validation error on line " + std::to_string(line_no) +
                        ": non-binary label");
    for (double p : rec.pxtrs)
      if (!(p >= 0.0 && p <= 1.0))
        throw DataError("validation error on line " + std::to_string(line_no) +
                        ": pxtr out of [0,1]");
    records.push_back(std::move(rec));
  }
  return records;
}

void save_dataset(const std::string& path, std::span<const RawInteraction> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const RawInteraction& rec : records) {
    nlohmann::ordered_json j;
    j["user_id"] = rec.user_id;
    j["item_id"] = rec.item_id;
    j["category_id"] = rec.category_id;
    j["ts"] = rec.ts;
    j["labels"] = rec.labels;
    j["pxtrs"] = rec.pxtrs;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<double> positive_rates(std::span<const RawInteraction> records) {
  require(!records.empty(), "positive_rates: no records");
  const size_t m = records.front().labels.size();
  std::vector<double> rates(m, 0.0);
  for (const RawInteraction& rec : records)
    for (size_t t = 0; t < m; ++t) rates[t] += rec.labels[t];
  for (double& r : rates) r /= static_cast<double>(records.size());
  return rates;
}

}  // namespace umre
