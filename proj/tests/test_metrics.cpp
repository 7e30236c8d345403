#include <doctest.h>

#include <cmath>

#include "umre/metrics.hpp"
#include "umre/rng.hpp"

using namespace umre;

namespace {
RankedItem item(long long id, double score, std::vector<int> labels) {
  return RankedItem{id, score, std::move(labels)};
}

std::vector<ScoreLabel> random_instance(Rng& rng, int max_items) {
  const int n = 2 + static_cast<int>(rng.below(max_items - 1));
  std::vector<ScoreLabel> pairs(n);
  bool has_pos = false, has_neg = false;
  for (auto& [s, y] : pairs) {
    // coarse grid forces plenty of exact ties
    s = std::floor(rng.uniform() * 8.0) / 8.0;
    y = rng.bernoulli(0.4) ? 1 : 0;
    (y ? has_pos : has_neg) = true;
  }
  if (!has_pos) pairs[0].second = 1;
  if (!has_neg) pairs[static_cast<size_t>(rng.below(pairs.size() - 1)) + 1].second = 0;
  return pairs;
}
}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("RankedSession ordering") {
  SUBCASE("from_unsorted sorts by score desc, id asc") {
    RankedSession s = RankedSession::from_unsorted(
        {item(3, 0.5, {0}), item(1, 0.9, {1}), item(2, 0.5, {0})});
    CHECK(s.items[0].item_id == 1);
    CHECK(s.items[1].item_id == 2);  // tie broken by ascending id
    CHECK(s.items[2].item_id == 3);
  }
  SUBCASE("constructor verifies order") {
    CHECK_THROWS_AS(RankedSession({item(1, 0.1, {0}), item(2, 0.9, {1})}),
                    std::invalid_argument);
    CHECK_THROWS_AS(RankedSession({}), std::invalid_argument);
  }
}

TEST_CASE("hr examples") {
  RankedSession s = RankedSession::from_unsorted({item(1, 0.9, {0}), item(2, 0.8, {1}),
                                                  item(3, 0.7, {0}), item(4, 0.6, {0})});
  CHECK(hr_at_k(s, 0, 3) == 1);  // positive ranked 2nd

  RankedSession s2 = RankedSession::from_unsorted({item(1, 0.9, {0}), item(2, 0.8, {0}),
                                                   item(3, 0.7, {0}), item(4, 0.6, {1})});
  CHECK(hr_at_k(s2, 0, 3) == 0);  // positive ranked 4th

  RankedSession s3 = RankedSession::from_unsorted({item(1, 0.9, {1}), item(2, 0.8, {1})});
  for (int k = 1; k <= 5; ++k) CHECK(hr_at_k(s3, 0, k) == 1);
}

TEST_CASE("ndcg examples") {
  RankedSession first = RankedSession::from_unsorted(
      {item(1, 0.9, {1}), item(2, 0.8, {0}), item(3, 0.7, {0})});
  CHECK(ndcg_at_k(first, 0, 3) == doctest::Approx(1.0).epsilon(1e-15));

  RankedSession second = RankedSession::from_unsorted(
      {item(1, 0.9, {0}), item(2, 0.8, {1}), item(3, 0.7, {0})});
  CHECK(ndcg_at_k(second, 0, 3) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  CHECK(ndcg_at_k(second, 0, 3) == doctest::Approx(0.63093).epsilon(1e-4));

  RankedSession fourth = RankedSession::from_unsorted({item(1, 0.9, {0}), item(2, 0.8, {0}),
                                                       item(3, 0.7, {0}), item(4, 0.6, {1})});
  CHECK(ndcg_at_k(fourth, 0, 3) == 0.0);
}

TEST_CASE("auc_bruteforce examples") {
  CHECK(auc_bruteforce(std::vector<ScoreLabel>{{1.0, 1}, {0.0, 0}}) == 1.0);
  CHECK(auc_bruteforce(std::vector<ScoreLabel>{{0.0, 1}, {1.0, 0}}) == 0.0);
  CHECK(auc_bruteforce(std::vector<ScoreLabel>{{0.5, 1}, {0.5, 0}}) == 0.5);
  CHECK_THROWS_AS(auc_bruteforce(std::vector<ScoreLabel>{{0.5, 1}, {0.4, 1}}),
                  std::invalid_argument);
}

TEST_CASE("rank-statistic auc equals the pairwise oracle exactly") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<ScoreLabel> pairs = random_instance(rng, 200);
    CHECK(auc_rank(pairs) == auc_bruteforce(pairs));
  }
}

TEST_CASE("uauc") {
  SUBCASE("perfect ordering gives 1") {
    std::map<long long, std::vector<ScoreLabel>> users;
    users[1] = {{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}};
    CHECK(uauc(users) == 1.0);
  }
  SUBCASE("all ties give one half") {
    std::map<long long, std::vector<ScoreLabel>> users;
    users[1] = {{0.5, 1}, {0.5, 0}};
    CHECK(uauc(users) == 0.5);
  }
  SUBCASE("single-class users are skipped") {
    std::map<long long, std::vector<ScoreLabel>> users;
    users[1] = {{0.9, 1}, {0.1, 0}};
    users[2] = {{0.9, 1}, {0.8, 1}};  // skipped
    CHECK(uauc(users) == 1.0);
  }
  SUBCASE("no qualifying user errors") {
    std::map<long long, std::vector<ScoreLabel>> users;
    users[1] = {{0.9, 1}};
    CHECK_THROWS(uauc(users));
  }
}

TEST_CASE("metrics are invariant under strictly increasing score transforms") {
  Rng rng(22);
  auto monotone = [](double x) { return x * x * x + x; };
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(20));
    std::vector<RankedItem> items;
    for (int i = 0; i < n; ++i) {
      const double score = std::floor(rng.uniform(-2.0, 2.0) * 16.0) / 16.0;
      items.push_back(item(i + 1, score, {rng.bernoulli(0.3) ? 1 : 0}));
    }
    items[0].labels[0] = 1;
    items[1].labels[0] = 0;
    std::vector<RankedItem> transformed = items;
    for (RankedItem& it : transformed) it.score = monotone(it.score);

    RankedSession a = RankedSession::from_unsorted(items);
    RankedSession b = RankedSession::from_unsorted(transformed);
    CHECK(hr_at_k(a, 0, 3) == hr_at_k(b, 0, 3));
    CHECK(ndcg_at_k(a, 0, 3) == ndcg_at_k(b, 0, 3));  // bit-identical

    std::vector<ScoreLabel> pa, pb;
    for (const RankedItem& it : a.items) pa.emplace_back(it.score, it.labels[0]);
    for (const RankedItem& it : b.items) pb.emplace_back(it.score, it.labels[0]);
    CHECK(auc_rank(pa) == auc_rank(pb));
  }
}

TEST_CASE("evaluate_ranked aggregates and excludes no-positive sessions") {
  std::vector<std::pair<long long, RankedSession>> sessions;
  // user 1: positive at rank 1 for task 0; no positives for task 1
  sessions.emplace_back(1, RankedSession::from_unsorted(
                               {item(1, 0.9, {1, 0}), item(2, 0.1, {0, 0})}));
  // user 2: task 0 positive at rank 2; task 1 positive at rank 1
  sessions.emplace_back(2, RankedSession::from_unsorted(
                               {item(1, 0.9, {0, 1}), item(2, 0.8, {1, 0})}));
  const MetricReport report = evaluate_ranked(sessions, 2, 3);
  CHECK(report.sessions == 2);
  CHECK(report.users == 2);
  CHECK(report.tasks[0].hr_sessions == 2);
  CHECK(report.tasks[1].hr_sessions == 1);  // the no-positive session is excluded
  CHECK(report.tasks[0].hr == 1.0);
  CHECK(report.tasks[1].ndcg == 1.0);
  CHECK(report.tasks[0].ndcg ==
        doctest::Approx(0.5 * (1.0 + 1.0 / std::log2(3.0))).epsilon(1e-12));
  // json shape
  const nlohmann::ordered_json j = report.to_json({"click", "like"});
  CHECK(j.contains("click"));
  CHECK(j["click"].contains("ndcg@3"));
  CHECK(j["counts"]["sessions"] == 2);
}

}  // TEST_SUITE
