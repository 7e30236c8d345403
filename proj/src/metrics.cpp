#include "umre/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "umre/tensor.hpp"

namespace umre {

namespace {
bool ranked_before(const RankedItem& a, const RankedItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item_id < b.item_id;
}
}  // namespace

RankedSession::RankedSession(std::vector<RankedItem> sorted_items)
    : items(std::move(sorted_items)) {
  require(!items.empty(), "RankedSession: at least one item required");
  for (size_t i = 1; i < items.size(); ++i)
    require(!ranked_before(items[i], items[i - 1]), "RankedSession: items not in ranked order");
}

RankedSession RankedSession::from_unsorted(std::vector<RankedItem> items) {
  std::sort(items.begin(), items.end(), ranked_before);
  return RankedSession(std::move(items));
}

bool session_has_positive(const RankedSession& s, int task) {
  for (const RankedItem& it : s.items)
    if (it.labels.at(task) == 1) return true;
  return false;
}

int hr_at_k(const RankedSession& s, int task, int k) {
  require(k >= 1, "hr_at_k: k must be >= 1");
  const int top = std::min<int>(k, static_cast<int>(s.items.size()));
  for (int r = 0; r < top; ++r)
    if (s.items[r].labels.at(task) == 1) return 1;
  return 0;
}

double ndcg_at_k(const RankedSession& s, int task, int k) {
  require(k >= 1, "ndcg_at_k: k must be >= 1");
  const int top = std::min<int>(k, static_cast<int>(s.items.size()));
  double dcg = 0.0;
  long long positives = 0;
  for (size_t r = 0; r < s.items.size(); ++r) {
    if (s.items[r].labels.at(task) == 1) {
      ++positives;
      if (static_cast<int>(r) < top) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  if (positives == 0) return 0.0;  // caller excludes these sessions
  double idcg = 0.0;
  const long long ideal = std::min<long long>(positives, top);
  for (long long r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

double auc_rank(std::span<const ScoreLabel> pairs) {
  std::vector<ScoreLabel> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoreLabel& a, const ScoreLabel& b) { return a.first < b.first; });
  long long pos = 0, neg = 0;
  for (const auto& [s, y] : sorted) {
    require(y == 0 || y == 1, "auc: labels must be binary");
    (y == 1 ? pos : neg)++;
  }
  require(pos >= 1 && neg >= 1, "auc: need at least one positive and one negative");
  // average ranks within tied groups; sums stay exact in doubles
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t r = i; r < j; ++r)
      if (sorted[r].second == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

double auc_bruteforce(std::span<const ScoreLabel> pairs) {
  long long pos = 0, neg = 0;
  for (const auto& [s, y] : pairs) {
    require(y == 0 || y == 1, "auc_bruteforce: labels must be binary");
    (y == 1 ? pos : neg)++;
  }
  require(pos >= 1 && neg >= 1, "auc_bruteforce: need both classes");
  double wins = 0.0;
  for (const auto& [sp, yp] : pairs) {
    if (yp != 1) continue;
    for (const auto& [sn, yn] : pairs) {
      if (yn != 0) continue;
      if (sp > sn)
        wins += 1.0;
      else if (sp == sn)
        wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

double uauc(const std::map<long long, std::vector<ScoreLabel>>& per_user) {
  double sum = 0.0;
  long long qualifying = 0;
  for (const auto& [user, pairs] : per_user) {
    long long pos = 0, neg = 0;
    for (const auto& [s, y] : pairs) (y == 1 ? pos : neg)++;
    if (pos == 0 || neg == 0) continue;
    sum += auc_rank(pairs);
    ++qualifying;
  }
  if (qualifying == 0) throw std::runtime_error("uauc: no user with both classes");
  return sum / static_cast<double>(qualifying);
}

double MetricReport::mean_ndcg() const {
  double s = 0.0;
  for (const TaskMetrics& t : tasks) s += t.ndcg;
  return tasks.empty() ? 0.0 : s / static_cast<double>(tasks.size());
}

nlohmann::ordered_json MetricReport::to_json(const std::vector<std::string>& task_names) const {
  nlohmann::ordered_json j;
  const std::string hr_key = "hr@" + std::to_string(k);
  const std::string ndcg_key = "ndcg@" + std::to_string(k);
  for (size_t t = 0; t < tasks.size(); ++t) {
    const std::string name = t < task_names.size() ? task_names[t] : "task" + std::to_string(t);
    j[name] = {{hr_key, tasks[t].hr}, {ndcg_key, tasks[t].ndcg}, {"uauc", tasks[t].uauc}};
  }
  j["counts"] = {{"sessions", sessions}, {"users", users}};
  return j;
}

MetricReport evaluate_ranked(const std::vector<std::pair<long long, RankedSession>>& sessions,
                             int num_tasks, int k) {
  MetricReport report;
  report.k = k;
  report.tasks.resize(static_cast<size_t>(num_tasks));
  report.sessions = static_cast<long long>(sessions.size());
  std::set<long long> users;
  std::vector<std::map<long long, std::vector<ScoreLabel>>> per_task_user(
      static_cast<size_t>(num_tasks));

  std::vector<double> hr_sum(num_tasks, 0.0), ndcg_sum(num_tasks, 0.0);
  std::vector<long long> included(num_tasks, 0);
  for (const auto& [user, session] : sessions) {
    users.insert(user);
    for (int t = 0; t < num_tasks; ++t) {
      if (session_has_positive(session, t)) {
        hr_sum[t] += hr_at_k(session, t, k);
        ndcg_sum[t] += ndcg_at_k(session, t, k);
        ++included[t];
      }
      auto& bucket = per_task_user[t][user];
      for (const RankedItem& it : session.items)
        bucket.emplace_back(it.score, it.labels.at(t));
    }
  }
  report.users = static_cast<long long>(users.size());
  for (int t = 0; t < num_tasks; ++t) {
    TaskMetrics& m = report.tasks[t];
    m.hr_sessions = included[t];
    if (included[t] > 0) {
      m.hr = hr_sum[t] / static_cast<double>(included[t]);
      m.ndcg = ndcg_sum[t] / static_cast<double>(included[t]);
    }
    long long q = 0;
    double s = 0.0;
    for (const auto& [user, pairs] : per_task_user[t]) {
      long long pos = 0, neg = 0;
      for (const auto& [sc, y] : pairs) (y == 1 ? pos : neg)++;
      if (pos == 0 || neg == 0) continue;
      s += auc_rank(pairs);
      ++q;
    }
    m.uauc_users = q;
    m.uauc = q > 0 ? s / static_cast<double>(q) : 0.0;
  }
  return report;
}

}  // namespace umre
