#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trollkit/corpus.hpp"
#include "trollkit/learner.hpp"
#include "trollkit/noise.hpp"

namespace trollkit {

struct PipelineConfig {
  FeaturizerConfig feat;
  TrainConfig train;
  std::size_t k = 5;
};

/// Out-of-fold probabilities of the unsafe class. Folds partition the
/// training set by user, so no example is scored by a model that saw any of
/// its author's data.
struct OofPredictions {
  std::size_t k = 0;
  std::map<std::string, double> p;                  // train id -> p_i
  std::map<std::string, std::size_t> fold_of_user;  // user id -> withheld fold
  std::vector<std::set<std::string>> fold_training_users;  // users seen by fold model i
  std::map<std::string, double> valid_p;  // valid id -> mean over the k fold models
};

OofPredictions oof_predict(const std::vector<Utterance>& train_set,
                           const std::vector<Utterance>& valid_set, std::size_t k,
                           const FeaturizerConfig& feat, const TrainConfig& train_cfg);

/// True when argmax(p) differs from the observed label. p == 0.5 agrees with
/// either label.
inline bool disagrees(double p, SafetyLabel observed) {
  if (p == 0.5) return false;
  return (p > 0.5) != (observed == SafetyLabel::Unsafe);
}

enum class CorrectionMode { Flip, Remove };

struct CorrectedDataset {
  std::vector<Utterance> kept;
  std::set<std::string> removed_ids;
  std::set<std::string> flipped_ids;
  std::set<std::string> removed_users;

  /// Examples flagged as suspicious: removed or flipped.
  std::set<std::string> flagged_ids() const;
  /// Throws IntegrityError if removed ids overlap kept ids or a flipped id is not kept.
  void check_invariants() const;
};

CorrectedDataset correct_per_example(const std::vector<Utterance>& data,
                                     const std::map<std::string, double>& p, CorrectionMode mode);

/// Per user: fraction of their examples on which the model disagrees.
std::map<std::string, double> user_disagreement(const std::vector<Utterance>& data,
                                                const std::map<std::string, double>& p);

struct TrustScore {
  double f = 0.0;         // example trust: probability mass on the user's label
  double g = 0.0;         // mean f over the same user's other examples
  double combined = 0.0;  // alpha f + (1 - alpha) g
};

struct TrustScores {
  double alpha = 1.0;
  std::map<std::string, TrustScore> by_id;
};

/// Users with a single example get g = 0.5.
inline constexpr double kEmptyUserTrust = 0.5;

TrustScores purr_scores(const std::vector<Utterance>& data, const std::map<std::string, double>& p,
                        double alpha);

/// Soft PURR with an arbitrary example-trust function f (id -> score in
/// [0, 1]); used for wild-mode scoring where f comes from a safety model.
TrustScores combine_user_trust(const std::vector<Utterance>& data,
                               const std::map<std::string, double>& f, double alpha);

struct MitigationResult {
  LinearModel model;
  CorrectedDataset train;
  CorrectedDataset valid;
};

enum class Algorithm {
  Baseline,
  PerExampleFlip,
  PerExampleRemove,
  SoftBootstrap,
  PerUserRemove,
  PerUserPlusExample,
  SoftPURR,
  Oracle,
};

std::string_view to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(std::string_view name);
const std::vector<Algorithm>& all_algorithms();
bool uses_oof(Algorithm a);

struct MitigationConfig {
  Algorithm algorithm = Algorithm::Baseline;
  double beta = 0.8;
  double theta = 0.5;
  double alpha = 0.5;
  double tau = 0.5;

  void validate() const;
};

MitigationResult run_baseline(const BenchmarkInstance& inst, const PipelineConfig& cfg);

/// Four steps: out-of-fold predictions; correct the train folds; train on the
/// corrected train set and correct the validation set with that model; train
/// the final model on corrected train + valid, early-stopped on corrected valid.
MitigationResult run_per_example_pipeline(const BenchmarkInstance& inst, CorrectionMode mode,
                                          const PipelineConfig& cfg,
                                          const OofPredictions* oof = nullptr);

LinearModel run_soft_bootstrap(const BenchmarkInstance& inst, double beta,
                               const PipelineConfig& cfg);

/// Drops every user whose out-of-fold disagreement exceeds theta; the
/// validation split is filtered the same way with the fold models' mean
/// predictions.
MitigationResult run_per_user_removal(const BenchmarkInstance& inst, double theta,
                                      const PipelineConfig& cfg,
                                      const OofPredictions* oof = nullptr);

MitigationResult run_per_user_plus_example(const BenchmarkInstance& inst, double theta,
                                           const PipelineConfig& cfg,
                                           const OofPredictions* oof = nullptr);

MitigationResult run_soft_purr(const BenchmarkInstance& inst, double alpha, double tau,
                               const PipelineConfig& cfg, const OofPredictions* oof = nullptr);

/// Removes exactly the corrupted examples from train and valid.
MitigationResult oracle_filter(const BenchmarkInstance& inst, const PipelineConfig& cfg);

MitigationResult run_mitigation(const BenchmarkInstance& inst, const MitigationConfig& mc,
                                const PipelineConfig& cfg, const OofPredictions* oof = nullptr);

}  // namespace trollkit
