#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace umre {

struct RankedItem {
  long long item_id = 0;
  double score = 0.0;
  std::vector<int> labels;  // one binary label per task
};

// Items sorted by score descending, item_id ascending on ties. The
// constructor verifies; from_unsorted sorts.
struct RankedSession {
  std::vector<RankedItem> items;

  explicit RankedSession(std::vector<RankedItem> sorted_items);
  static RankedSession from_unsorted(std::vector<RankedItem> items);
};

bool session_has_positive(const RankedSession& s, int task);

// 1 if any of the top-k items is positive for the task. Aggregation over
// sessions excludes those with no positive for the task.
int hr_at_k(const RankedSession& s, int task, int k);

// Binary-label DCG@k / IDCG@k; IDCG from the ideal reordering of the
// session's labels.
double ndcg_at_k(const RankedSession& s, int task, int k);

using ScoreLabel = std::pair<double, int>;

// Rank-statistic AUC with ties counted 0.5. Requires both classes.
double auc_rank(std::span<const ScoreLabel> pairs);

// O(P*N) pairwise oracle: (wins + 0.5*ties) / (P*N).
double auc_bruteforce(std::span<const ScoreLabel> pairs);

// Mean AUC over users having at least one positive and one negative;
// others are skipped. Throws if no user qualifies.
double uauc(const std::map<long long, std::vector<ScoreLabel>>& per_user);

struct TaskMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  double uauc = 0.0;
  long long hr_sessions = 0;  // sessions with a positive, i.e. included in HR/NDCG
  long long uauc_users = 0;
};

struct MetricReport {
  int k = 3;
  std::vector<TaskMetrics> tasks;
  long long sessions = 0;
  long long users = 0;

  double mean_ndcg() const;
  nlohmann::ordered_json to_json(const std::vector<std::string>& task_names) const;
};

// sessions_by_user: (user_id, ranked session) pairs; labels per item must
// cover num_tasks.
MetricReport evaluate_ranked(const std::vector<std::pair<long long, RankedSession>>& sessions,
                             int num_tasks, int k);

}  // namespace umre
