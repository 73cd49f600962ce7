#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "trollkit/corpus.hpp"

namespace trollkit {

/// Unsafe (class 1) is the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const SafetyLabel> predictions,
                          std::span<const SafetyLabel> gold);

/// Mean of sensitivity and specificity. Throws MetricError when gold has a
/// single class.
double balanced_accuracy(const ConfusionCounts& counts);
double balanced_accuracy(std::span<const SafetyLabel> predictions,
                         std::span<const SafetyLabel> gold);
std::optional<double> try_balanced_accuracy(std::span<const SafetyLabel> predictions,
                                            std::span<const SafetyLabel> gold);

/// Probability that a random unsafe item scores above a random safe one
/// (ties count half). Undefined when `gold` has a single class.
std::optional<double> roc_auc(std::span<const double> unsafe_scores,
                              std::span<const SafetyLabel> gold);

struct DetectionResult {
  std::optional<double> precision;  // undefined iff nothing was removed
  std::optional<double> recall;     // undefined iff nothing was corrupted
  std::size_t removed_count = 0;
  std::size_t corrupted_count = 0;
  std::size_t hit_count = 0;

  /// Table-style rendering: undefined values read as 0 with this flag set.
  bool empty() const { return !precision || !recall; }
  double precision_or_zero() const { return precision.value_or(0.0); }
  double recall_or_zero() const { return recall.value_or(0.0); }
};

DetectionResult detection_metrics(const std::set<std::string>& removed_ids,
                                  const std::set<std::string>& corrupted_ids);

struct PRPoint {
  double threshold = 0.0;
  DetectionResult detection;
};

struct PRCurve {
  std::vector<PRPoint> points;  // ascending threshold
};

/// At each threshold the removed set is every id scoring strictly below it.
PRCurve pr_curve(const std::map<std::string, double>& scores,
                 const std::set<std::string>& corrupted_ids, std::span<const double> thresholds);

/// Thresholds just above each distinct score, plus one below the minimum, so
/// the curve visits every achievable removal set.
std::vector<double> exhaustive_thresholds(const std::map<std::string, double>& scores);

/// Step-wise area under the curve: sum over points of (R_n - R_{n-1}) P_n.
/// Points with undefined precision contribute nothing.
double average_precision(const PRCurve& curve);

}  // namespace trollkit
