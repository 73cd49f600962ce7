#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "trollkit/error.hpp"
#include "trollkit/eval.hpp"

using namespace tk_test;

namespace {

std::vector<SafetyLabel> labels(std::initializer_list<int> xs) {
  std::vector<SafetyLabel> out;
  for (int x : xs) out.push_back(label_from_int(x));
  return out;
}

std::vector<SafetyLabel> swapped(std::vector<SafetyLabel> xs) {
  for (auto& x : xs) x = flipped(x);
  return xs;
}

}  // namespace

TEST_CASE("confusion counts treat unsafe as positive") {
  const auto c = confusion(labels({1, 1, 0, 0, 1}), labels({1, 0, 0, 1, 1}));
  CHECK(c == ConfusionCounts{2, 1, 1, 1});
  CHECK(c.total() == 5);
  CHECK_THROWS_AS(confusion(labels({1}), labels({1, 0})), MetricError);
}

TEST_CASE("balanced accuracy examples") {
  const auto gold = labels({1, 0, 0, 1, 0, 0});
  CHECK(balanced_accuracy(gold, gold) == 1.0);
  CHECK(balanced_accuracy(labels({0, 0, 0, 0, 0, 0}), gold) == 0.5);
  CHECK(balanced_accuracy(labels({1, 1, 1, 1, 1, 1}), gold) == 0.5);
  CHECK(balanced_accuracy(ConfusionCounts{90, 90, 810, 10}) == doctest::Approx(0.9));
  CHECK_THROWS_AS(balanced_accuracy(labels({0, 1}), labels({0, 0})), MetricError);
  CHECK_FALSE(try_balanced_accuracy(labels({0, 1}), labels({1, 1})).has_value());
}

TEST_CASE("balanced accuracy is permutation invariant and class symmetric") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<SafetyLabel> pred(n);
    std::vector<SafetyLabel> gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = label_from_int(static_cast<int>(rng.below(2)));
      gold[i] = label_from_int(static_cast<int>(rng.below(2)));
    }
    gold[0] = SafetyLabel::Safe;
    gold[1] = SafetyLabel::Unsafe;
    const double base = balanced_accuracy(pred, gold);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span(order));
    std::vector<SafetyLabel> p2;
    std::vector<SafetyLabel> g2;
    for (auto i : order) {
      p2.push_back(pred[i]);
      g2.push_back(gold[i]);
    }
    CHECK(balanced_accuracy(p2, g2) == doctest::Approx(base).epsilon(1e-12));
    CHECK(balanced_accuracy(swapped(pred), swapped(gold)) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc against a pairwise count") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> score(n);
    std::vector<SafetyLabel> gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      score[i] = static_cast<double>(rng.below(6)) / 5.0;  // frequent ties
      gold[i] = rng.bernoulli(0.4) ? SafetyLabel::Unsafe : SafetyLabel::Safe;
    }
    gold[0] = SafetyLabel::Safe;
    gold[1] = SafetyLabel::Unsafe;
    double wins = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (gold[i] != SafetyLabel::Unsafe || gold[j] != SafetyLabel::Safe) continue;
        pairs += 1;
        wins += score[i] > score[j] ? 1.0 : score[i] == score[j] ? 0.5 : 0.0;
      }
    CHECK(roc_auc(score, gold).value() == doctest::Approx(wins / pairs).epsilon(1e-12));
  }
  const std::vector<double> s{0.1, 0.2};
  CHECK_FALSE(roc_auc(s, labels({0, 0})).has_value());
  CHECK_THROWS_AS(roc_auc(s, labels({0})), MetricError);
}

TEST_CASE("detection metrics examples") {
  const std::set<std::string> corrupted{"b", "c"};
  const auto half = detection_metrics({"a", "b"}, corrupted);
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 0.5);
  CHECK(half.hit_count == 1);

  const auto oracle = detection_metrics(corrupted, corrupted);
  CHECK(oracle.precision == 1.0);
  CHECK(oracle.recall == 1.0);
  CHECK_FALSE(oracle.empty());

  const auto none = detection_metrics({}, corrupted);
  CHECK_FALSE(none.precision.has_value());
  CHECK(none.recall == 0.0);
  CHECK(none.empty());
  CHECK(none.precision_or_zero() == 0.0);

  const auto clean_data = detection_metrics({"a"}, {});
  CHECK(clean_data.precision == 0.0);
  CHECK_FALSE(clean_data.recall.has_value());
}

TEST_CASE("pr curve boundary points") {
  const std::map<std::string, double> scores{{"a", 0.1}, {"b", 0.4}, {"c", 0.6}, {"d", 0.9}};
  const std::set<std::string> corrupted{"a", "c"};
  const std::vector<double> th{0.0, 1.0};
  const auto curve = pr_curve(scores, corrupted, th);
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[0].detection.removed_count == 0);
  CHECK_FALSE(curve.points[0].detection.precision.has_value());
  CHECK(curve.points[1].detection.recall == 1.0);
  CHECK(curve.points[1].detection.precision == doctest::Approx(0.5));  // |corrupted| / |all|
}

TEST_CASE("pr curve matches brute-force enumeration on six scores") {
  const std::map<std::string, double> scores{{"a", 0.05}, {"b", 0.2}, {"c", 0.2},
                                             {"d", 0.55}, {"e", 0.7}, {"f", 0.95}};
  const std::set<std::string> corrupted{"a", "c", "e"};
  const auto th = exhaustive_thresholds(scores);
  CHECK(std::is_sorted(th.begin(), th.end()));
  const auto curve = pr_curve(scores, corrupted, th);
  REQUIRE(curve.points.size() == th.size());

  // Every achievable removal set is a prefix of the ascending score order.
  std::set<std::set<std::string>> achievable;
  std::vector<double> distinct;
  for (const auto& [id, s] : scores) distinct.push_back(s);
  distinct.push_back(-1.0);
  for (double cut : distinct) {
    std::set<std::string> removed;
    for (const auto& [id, s] : scores)
      if (s <= cut) removed.insert(id);
    achievable.insert(removed);
  }
  std::set<std::set<std::string>> visited;
  for (const auto& pt : curve.points) {
    std::set<std::string> removed;
    std::size_t hits = 0;
    for (const auto& [id, s] : scores)
      if (s < pt.threshold) {
        removed.insert(id);
        hits += corrupted.contains(id);
      }
    visited.insert(removed);
    CHECK(pt.detection.removed_count == removed.size());
    CHECK(pt.detection.hit_count == hits);
    if (!removed.empty())
      CHECK(*pt.detection.precision == doctest::Approx(double(hits) / removed.size()));
    CHECK(*pt.detection.recall == doctest::Approx(double(hits) / 3.0));
  }
  CHECK(visited == achievable);
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    CHECK(curve.points[i].detection.recall_or_zero() >=
          curve.points[i - 1].detection.recall_or_zero());
}

TEST_CASE("average precision is the recall-weighted step sum") {
  const std::map<std::string, double> scores{{"a", 0.1}, {"b", 0.2}, {"c", 0.3}, {"d", 0.4}};
  const auto th = exhaustive_thresholds(scores);
  // Perfect ranking: all corrupted examples score lowest.
  CHECK(average_precision(pr_curve(scores, {"a", "b"}, th)) == doctest::Approx(1.0));
  // Hand computation: order a(hit) b(miss) c(hit) d(miss): 0.5*1 + 0.5*(2/3).
  CHECK(average_precision(pr_curve(scores, {"a", "c"}, th)) == doctest::Approx(0.5 + 1.0 / 3.0));
}
