#include "umre/trainer.hpp"

#include <cmath>
#include <iostream>
#include <map>

#include "umre/errors.hpp"
#include "umre/metrics.hpp"

namespace umre {

std::vector<double> validation_uauc(const UmreModel& model, const std::vector<Session>& valid,
                                    const std::vector<double>& fallback) {
  const int m = model.config().num_tasks;
  std::vector<std::map<long long, std::vector<ScoreLabel>>> per_task(static_cast<size_t>(m));
  for (const Session& sess : valid) {
    const std::vector<double> scores = model.forward_session(sess);
    for (size_t j = 0; j < sess.records.size(); ++j)
      for (int t = 0; t < m; ++t)
        per_task[t][sess.user_id].emplace_back(scores[j], sess.records[j].labels[t]);
  }
  std::vector<double> out(static_cast<size_t>(m));
  for (int t = 0; t < m; ++t) {
    try {
      out[t] = uauc(per_task[t]);
    } catch (const std::runtime_error&) {
      out[t] = t < static_cast<int>(fallback.size()) ? fallback[t] : 0.5;
      std::cerr << "warning: no qualifying validation user for task " << t
                << "; carrying previous UAUC\n";
    }
  }
  return out;
}

TrainResult train_model(UmreModel& model, const std::vector<Session>& train,
                        const std::vector<Session>& valid, const TrainSettings& settings) {
  require(!train.empty(), "train_model: empty training split");
  require(settings.batch_sessions >= 1, "train_model: batch_sessions must be >= 1");
  const int m = model.config().num_tasks;
  settings.pareto.validate(m);

  std::vector<RawInteraction> train_records;
  for (const Session& s : train)
    train_records.insert(train_records.end(), s.records.begin(), s.records.end());
  std::vector<double> omega = init_weights(positive_rates(train_records),
                                           settings.pareto.omega_min, settings.pareto.omega_max);

  AdamW opt(model.parameters(), settings.adam);
  Rng shuffle_rng = Rng(settings.seed).fork(0x65706f63);
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  std::vector<double> u_prev;
  for (int epoch = 0; epoch < settings.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    long long record_count = 0;
    int batch_index = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(settings.batch_sessions), ++batch_index) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(settings.batch_sessions));
      long long batch_records = 0;
      for (size_t i = start; i < end; ++i)
        batch_records += static_cast<long long>(train[order[i]].records.size());
      if (batch_records == 0) continue;

      double batch_loss = 0.0;
      for (size_t i = start; i < end; ++i) {
        const Session& sess = train[order[i]];
        UmreModel::SessionCache cache;
        const std::vector<double> scores = model.forward_session(sess, &cache);
        std::vector<double> d_scores(scores.size());
        for (size_t j = 0; j < scores.size(); ++j) {
          const double reward = compose_reward(sess.records[j].labels, omega);
          const double diff = scores[j] - reward;
          batch_loss += diff * diff;
          d_scores[j] = 2.0 * diff / static_cast<double>(batch_records);
        }
        model.backward_session(sess, cache, d_scores);
      }
      batch_loss /= static_cast<double>(batch_records);
      if (!std::isfinite(batch_loss))
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      opt.step();
      loss_sum += batch_loss * static_cast<double>(batch_records);
      record_count += batch_records;
    }

    const std::vector<double> u_cur = validation_uauc(model, valid, u_prev);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(record_count);
    log.omega = omega;
    log.uauc = u_cur;
    result.trace.push_back(log);
    result.epochs_run = epoch + 1;

    bool stop = false;
    if (settings.pareto_enabled && epoch >= settings.pareto.warmup && !u_prev.empty()) {
      const std::vector<double> next = pareto_update(omega, u_prev, u_cur, settings.pareto);
      // the L1 stop rule only becomes meaningful once updates happen
      if (converged(omega, next, settings.pareto.eps)) {
        result.converged_early = true;
        stop = true;
      }
      omega = next;
    }
    u_prev = u_cur;
    if (stop) break;
  }
  result.final_omega = omega;
  return result;
}

}  // namespace umre
