#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trollkit/config.hpp"
#include "trollkit/corpus.hpp"
#include "trollkit/eval.hpp"
#include "trollkit/learner.hpp"

namespace trollkit {

/// Deployment-style utterances with no safety annotation attached to the
/// text: every observed label is Safe, and an unsafe text is therefore a
/// corrupted (low-quality) record. Troll users write unsafe text at
/// `troll_low_quality`, helpers at `helper_low_quality`.
std::vector<Utterance> generate_wild_set(const WildSpec& spec, const PoolSpec& pool_spec,
                                         std::uint64_t seed);

/// Trains the stand-in safety classifier on clean labels from a fresh pool
/// that shares the wild set's vocabulary.
LinearModel train_wild_model(const WildSpec& spec, const PoolSpec& pool_spec,
                             const FeaturizerConfig& feat, const TrainConfig& train_cfg,
                             std::uint64_t seed);

struct WildRecord {
  std::string user_id;
  std::string id;
  std::string text;
  double score_f = 0.0;  // classifier probability that the text is safe
  double score_g = 0.0;  // mean score_f over the user's other records
  double combined = 0.0;
  std::size_t rank = 0;  // 1 = least trusted
};

struct WildScoring {
  double alpha = 1.0;
  std::vector<WildRecord> records;  // input order
  std::optional<PRCurve> curve;     // only when every record is annotated
  std::vector<std::string> warnings;
};

/// Zero-shot trust scoring. Records without a user id are treated as
/// single-record users. When `thresholds` is empty the curve uses every
/// achievable removal set.
WildScoring score_wild(const LinearModel& model, const std::vector<Utterance>& data, double alpha,
                       std::span<const double> thresholds = {});

struct AlphaPoint {
  double alpha = 0.0;
  double average_precision = 0.0;
  PRCurve curve;
};

/// PR curve and average precision for each alpha. Requires annotated data.
std::vector<AlphaPoint> alpha_sweep(const LinearModel& model, const std::vector<Utterance>& data,
                                    std::span<const double> alphas);

std::string render_wild_csv(const WildScoring& scoring);
std::string render_pr_csv(const PRCurve& curve);

}  // namespace trollkit
