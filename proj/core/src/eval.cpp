#include "trollkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "trollkit/error.hpp"

namespace trollkit {

ConfusionCounts confusion(std::span<const SafetyLabel> predictions,
                          std::span<const SafetyLabel> gold) {
  if (predictions.size() != gold.size())
    throw MetricError("predictions and gold labels differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool pred_pos = predictions[i] == SafetyLabel::Unsafe;
    if (gold[i] == SafetyLabel::Unsafe)
      ++(pred_pos ? c.tp : c.fn);
    else
      ++(pred_pos ? c.fp : c.tn);
  }
  return c;
}

double balanced_accuracy(const ConfusionCounts& c) {
  const std::size_t pos = c.tp + c.fn;
  const std::size_t neg = c.tn + c.fp;
  if (pos == 0 || neg == 0)
    throw MetricError("balanced accuracy needs both classes in the gold labels");
  const double sensitivity = static_cast<double>(c.tp) / static_cast<double>(pos);
  const double specificity = static_cast<double>(c.tn) / static_cast<double>(neg);
  return (sensitivity + specificity) / 2.0;
}

double balanced_accuracy(std::span<const SafetyLabel> predictions,
                         std::span<const SafetyLabel> gold) {
  return balanced_accuracy(confusion(predictions, gold));
}

std::optional<double> try_balanced_accuracy(std::span<const SafetyLabel> predictions,
                                            std::span<const SafetyLabel> gold) {
  const auto c = confusion(predictions, gold);
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) return std::nullopt;
  return balanced_accuracy(c);
}

std::optional<double> roc_auc(std::span<const double> unsafe_scores,
                              std::span<const SafetyLabel> gold) {
  if (unsafe_scores.size() != gold.size())
    throw MetricError("scores and gold labels differ in length");
  std::vector<std::size_t> order(gold.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return unsafe_scores[a] < unsafe_scores[b]; });
  // Mann-Whitney U from midranks.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && unsafe_scores[order[j]] == unsafe_scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (gold[order[k]] == SafetyLabel::Unsafe) {
        rank_sum += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = gold.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

DetectionResult detection_metrics(const std::set<std::string>& removed_ids,
                                  const std::set<std::string>& corrupted_ids) {
  DetectionResult r;
  r.removed_count = removed_ids.size();
  r.corrupted_count = corrupted_ids.size();
  for (const auto& id : removed_ids) r.hit_count += corrupted_ids.contains(id);
  if (r.removed_count)
    r.precision = static_cast<double>(r.hit_count) / static_cast<double>(r.removed_count);
  if (r.corrupted_count)
    r.recall = static_cast<double>(r.hit_count) / static_cast<double>(r.corrupted_count);
  return r;
}

PRCurve pr_curve(const std::map<std::string, double>& scores,
                 const std::set<std::string>& corrupted_ids, std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw MetricError("pr_curve thresholds must be sorted ascending");
  // Sort once by score; each threshold then removes a prefix.
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(scores.size());
  for (const auto& [id, s] : scores) ranked.emplace_back(s, &id);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PRCurve curve;
  curve.points.reserve(thresholds.size());
  std::size_t cut = 0;
  std::size_t hits = 0;
  for (double t : thresholds) {
    while (cut < ranked.size() && ranked[cut].first < t) {
      hits += corrupted_ids.contains(*ranked[cut].second);
      ++cut;
    }
    PRPoint pt;
    pt.threshold = t;
    auto& d = pt.detection;
    d.removed_count = cut;
    d.corrupted_count = corrupted_ids.size();
    d.hit_count = hits;
    if (cut) d.precision = static_cast<double>(hits) / static_cast<double>(cut);
    if (!corrupted_ids.empty())
      d.recall = static_cast<double>(hits) / static_cast<double>(corrupted_ids.size());
    curve.points.push_back(pt);
  }
  return curve;
}

std::vector<double> exhaustive_thresholds(const std::map<std::string, double>& scores) {
  std::vector<double> values;
  values.reserve(scores.size() + 1);
  for (const auto& [_, s] : scores) values.push_back(s);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> thresholds;
  thresholds.reserve(values.size() + 1);
  thresholds.push_back(values.empty() ? 0.0 : values.front());
  for (double v : values)
    thresholds.push_back(std::nextafter(v, std::numeric_limits<double>::infinity()));
  return thresholds;
}

double average_precision(const PRCurve& curve) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& pt : curve.points) {
    if (!pt.detection.precision || !pt.detection.recall) continue;
    const double r = *pt.detection.recall;
    ap += (r - prev_recall) * *pt.detection.precision;
    prev_recall = r;
  }
  return ap;
}

}  // namespace trollkit
