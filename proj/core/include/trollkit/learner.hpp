#pragma once

#include <array>
#include <climits>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trollkit/corpus.hpp"
#include "trollkit/rng.hpp"

namespace trollkit {

struct FeaturizerConfig {
  std::vector<int> ngram_orders{1, 2};
  std::uint32_t dimension = 1u << 18;  // power of two
  bool include_bias = true;

  void validate() const;
  bool operator==(const FeaturizerConfig&) const = default;
};

/// Sparse hashed n-gram counts, sorted by index with duplicates merged.
/// The bias feature is carried separately in `bias`.
struct FeatureVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  bool bias = false;

  std::size_t size() const { return indices.size(); }
  bool operator==(const FeatureVector&) const = default;
};

FeatureVector featurize(std::string_view text, const FeaturizerConfig& config);

// --- losses ----------------------------------------------------------------

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;

enum class LossKind { CrossEntropy, SoftBootstrap };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  double beta = 1.0;  // SoftBootstrap only

  static LossSpec cross_entropy() { return {LossKind::CrossEntropy, 1.0}; }
  static LossSpec soft_bootstrap(double beta) { return {LossKind::SoftBootstrap, beta}; }
  bool operator==(const LossSpec&) const = default;
};

struct LossAndGrad {
  double value = 0.0;
  std::array<double, 2> grad{};  // w.r.t. the two class logits
};

/// Loss of class probabilities `q` (softmax of two logits) against the
/// observed label, with its exact gradient w.r.t. the logits.
///
/// Soft bootstrap minimizes -sum_k [beta t_k + (1 - beta) q_k] log q_k. The
/// target term depends on q, so the gradient is
///   beta (q_j - t_j) - (1 - beta) q_j (log q_j - sum_k q_k log q_k).
LossAndGrad loss_and_grad(std::array<double, 2> q, SafetyLabel target, const LossSpec& loss);

// --- training ---------------------------------------------------------------

struct TrainConfig {
  static constexpr int kUnlimitedPatience = INT_MAX;

  double learning_rate = 0.1;
  int max_epochs = 200;
  int patience = 10;
  int batch_size = 16;
  bool balanced_batches = true;
  LossSpec loss;
  double l2 = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double valid_balanced_accuracy = 0.0;  // NaN when valid has a single observed class
  double valid_accuracy = 0.0;
  double valid_loss = 0.0;  // cross-entropy on observed labels, averaged per class then across classes
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool single_class_warning = false;
};

class LinearModel {
 public:
  LinearModel() : LinearModel(FeaturizerConfig{}) {}
  explicit LinearModel(FeaturizerConfig featurizer);

  const FeaturizerConfig& featurizer() const { return featurizer_; }
  std::span<const double> weights() const { return weights_; }
  double bias_weight() const { return bias_; }
  const TrainingLog& log() const { return log_; }

  void set_weight(std::uint32_t index, double value) { weights_.at(index) = value; }
  void set_bias_weight(double value) { bias_ = value; }

  double logit(const FeatureVector& x) const;
  /// Probability of the unsafe class, clamped to [eps, 1 - eps].
  double predict_proba(const FeatureVector& x) const;
  double predict_proba(std::string_view text) const;
  /// Unsafe iff the probability exceeds 0.5; ties go to safe.
  SafetyLabel predict(std::string_view text) const;

  bool is_finite() const;

  /// Equal featurizer, weights, and bias (the training log is not compared).
  bool same_parameters(const LinearModel& other) const;

 private:
  friend LinearModel train(const std::vector<Utterance>&, const std::vector<Utterance>&,
                           const FeaturizerConfig&, const TrainConfig&);
  friend LinearModel deserialize_model(std::string_view);

  FeaturizerConfig featurizer_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  TrainingLog log_;
};

double sigmoid(double z);

/// Orders one epoch of example indices into batches. With balanced batching
/// and both classes present, the minority class is resampled (repeated
/// shuffled passes) up to the majority size and the classes alternate, so
/// every batch has |#pos - #neg| <= 1.
std::vector<std::vector<std::size_t>> plan_epoch_batches(std::span<const SafetyLabel> labels,
                                                         const TrainConfig& config, Rng& rng);

/// Logistic regression by mini-batch gradient descent on observed labels,
/// early-stopped on validation balanced accuracy (ties broken by lower
/// validation loss). A single-class validation set ranks epochs by accuracy
/// alone and keeps the earliest of equals, since its loss only rewards
/// drifting toward that class. Returns the best epoch's weights.
LinearModel train(const std::vector<Utterance>& train_set, const std::vector<Utterance>& valid_set,
                  const FeaturizerConfig& feat_config, const TrainConfig& train_config);

// --- persistence ------------------------------------------------------------

std::string serialize_model(const LinearModel& model);
LinearModel deserialize_model(std::string_view text);
void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace trollkit
