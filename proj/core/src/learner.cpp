#include "trollkit/learner.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "trollkit/error.hpp"
#include "trollkit/eval.hpp"
#include "trollkit/text.hpp"

namespace trollkit {

void FeaturizerConfig::validate() const {
  if (ngram_orders.empty()) throw InvalidSpecError("ngram_orders must be non-empty");
  for (int n : ngram_orders)
    if (n < 1) throw InvalidSpecError("ngram orders must be positive");
  if (dimension < 2 || !std::has_single_bit(dimension))
    throw InvalidSpecError("feature dimension must be a power of two >= 2");
}

FeatureVector featurize(std::string_view text, const FeaturizerConfig& config) {
  const auto tokens = tokenize(text);
  const std::uint32_t mask = config.dimension - 1;

  std::vector<std::uint32_t> raw;
  for (int order : config.ngram_orders) {
    const auto n = static_cast<std::size_t>(order);
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (std::size_t k = 0; k < n; ++k) {
        if (k) {
          h ^= static_cast<unsigned char>(' ');
          h *= 0x100000001b3ULL;
        }
        for (unsigned char c : tokens[i + k]) {
          h ^= c;
          h *= 0x100000001b3ULL;
        }
      }
      raw.push_back(static_cast<std::uint32_t>(h & mask));
    }
  }
  std::sort(raw.begin(), raw.end());

  FeatureVector fv;
  fv.bias = config.include_bias;
  for (std::size_t i = 0; i < raw.size();) {
    std::size_t j = i;
    while (j < raw.size() && raw[j] == raw[i]) ++j;
    fv.indices.push_back(raw[i]);
    fv.values.push_back(static_cast<double>(j - i));
    i = j;
  }
  return fv;
}

LossAndGrad loss_and_grad(std::array<double, 2> q, SafetyLabel target, const LossSpec& loss) {
  const double q0 = std::clamp(q[0], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  const double q1 = std::clamp(q[1], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  const std::array<double, 2> log_q{std::log(q0), std::log(q1)};
  const std::array<double, 2> t{target == SafetyLabel::Safe ? 1.0 : 0.0,
                                target == SafetyLabel::Unsafe ? 1.0 : 0.0};

  LossAndGrad out;
  if (loss.kind == LossKind::CrossEntropy) {
    out.value = -(t[0] * log_q[0] + t[1] * log_q[1]);
    out.grad = {q[0] - t[0], q[1] - t[1]};
    return out;
  }

  const double beta = loss.beta;
  const double neg_entropy = q[0] * log_q[0] + q[1] * log_q[1];
  for (std::size_t k = 0; k < 2; ++k) {
    const double coef = beta * t[k] + (1.0 - beta) * q[k];
    out.value -= coef * log_q[k];
    out.grad[k] = beta * (q[k] - t[k]) - (1.0 - beta) * q[k] * (log_q[k] - neg_entropy);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidSpecError("learning_rate must be positive");
  if (max_epochs < 1) throw InvalidSpecError("max_epochs must be at least 1");
  if (patience < 1) throw InvalidSpecError("patience must be at least 1");
  if (batch_size < 1) throw InvalidSpecError("batch_size must be at least 1");
  if (!(l2 >= 0.0)) throw InvalidSpecError("l2 must be non-negative");
  if (loss.kind == LossKind::SoftBootstrap && !(loss.beta >= 0.0 && loss.beta <= 1.0))
    throw InvalidSpecError("soft bootstrap beta must lie in [0, 1]");
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LinearModel::LinearModel(FeaturizerConfig featurizer)
    : featurizer_(std::move(featurizer)), weights_(featurizer_.dimension, 0.0) {}

double LinearModel::logit(const FeatureVector& x) const {
  double z = x.bias ? bias_ : 0.0;
  for (std::size_t i = 0; i < x.indices.size(); ++i) z += weights_[x.indices[i]] * x.values[i];
  return z;
}

double LinearModel::predict_proba(const FeatureVector& x) const {
  return std::clamp(sigmoid(logit(x)), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

double LinearModel::predict_proba(std::string_view text) const {
  return predict_proba(featurize(text, featurizer_));
}

SafetyLabel LinearModel::predict(std::string_view text) const {
  return predict_proba(text) > 0.5 ? SafetyLabel::Unsafe : SafetyLabel::Safe;
}

bool LinearModel::is_finite() const {
  return std::isfinite(bias_) &&
         std::all_of(weights_.begin(), weights_.end(), [](double w) { return std::isfinite(w); });
}

bool LinearModel::same_parameters(const LinearModel& other) const {
  return featurizer_ == other.featurizer_ && bias_ == other.bias_ && weights_ == other.weights_;
}

std::vector<std::vector<std::size_t>> plan_epoch_batches(std::span<const SafetyLabel> labels,
                                                         const TrainConfig& config, Rng& rng) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == SafetyLabel::Unsafe ? pos : neg).push_back(i);

  std::vector<std::size_t> order;
  if (config.balanced_batches && !pos.empty() && !neg.empty()) {
    auto& major = pos.size() >= neg.size() ? pos : neg;
    auto& minor = pos.size() >= neg.size() ? neg : pos;
    rng.shuffle(std::span(major));
    std::vector<std::size_t> resampled;
    resampled.reserve(major.size());
    std::vector<std::size_t> pass = minor;
    while (resampled.size() < major.size()) {
      rng.shuffle(std::span(pass));
      for (std::size_t i = 0; i < pass.size() && resampled.size() < major.size(); ++i)
        resampled.push_back(pass[i]);
    }
    order.reserve(2 * major.size());
    for (std::size_t i = 0; i < major.size(); ++i) {
      order.push_back(major[i]);
      order.push_back(resampled[i]);
    }
  } else {
    order.resize(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span(order));
  }

  std::vector<std::vector<std::size_t>> batches;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (std::size_t i = 0; i < order.size(); i += bs)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + bs)));
  return batches;
}

namespace {

/// Example re-indexed into the compact space of features seen in training.
struct LocalExample {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  bool bias = false;
  SafetyLabel label = SafetyLabel::Safe;
};

class LocalIndex {
 public:
  std::uint32_t intern(std::uint32_t global) {
    auto [it, inserted] = map_.try_emplace(global, static_cast<std::uint32_t>(globals_.size()));
    if (inserted) globals_.push_back(global);
    return it->second;
  }
  const std::uint32_t* find(std::uint32_t global) const {
    auto it = map_.find(global);
    return it == map_.end() ? nullptr : &it->second;
  }
  const std::vector<std::uint32_t>& globals() const { return globals_; }

 private:
  std::unordered_map<std::uint32_t, std::uint32_t> map_;
  std::vector<std::uint32_t> globals_;
};

/// Mean over the classes present of each class's mean loss.
double class_mean_loss(const std::array<double, 2>& sum, const std::array<std::size_t, 2>& count) {
  double total = 0.0;
  int classes = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    if (count[c] == 0) continue;
    total += sum[c] / static_cast<double>(count[c]);
    ++classes;
  }
  return total / classes;
}

/// A candidate epoch beats the incumbent on higher balanced accuracy, then
/// lower loss. With a single-class validation set (balanced accuracy
/// undefined) only a strictly higher accuracy counts.
bool improves(const EpochRecord& cand, const EpochRecord& best) {
  if (std::isnan(cand.valid_balanced_accuracy) || std::isnan(best.valid_balanced_accuracy))
    return cand.valid_accuracy > best.valid_accuracy;
  if (cand.valid_balanced_accuracy != best.valid_balanced_accuracy)
    return cand.valid_balanced_accuracy > best.valid_balanced_accuracy;
  return cand.valid_loss < best.valid_loss;
}

}  // namespace

LinearModel train(const std::vector<Utterance>& train_set, const std::vector<Utterance>& valid_set,
                  const FeaturizerConfig& feat_config, const TrainConfig& cfg) {
  feat_config.validate();
  cfg.validate();
  if (train_set.empty()) throw DegenerateDataError("training set is empty");
  if (valid_set.empty()) throw DegenerateDataError("validation set is empty");

  LocalIndex index;
  std::vector<LocalExample> train_ex;
  train_ex.reserve(train_set.size());
  std::vector<SafetyLabel> labels;
  for (const auto& u : train_set) {
    const auto fv = featurize(u.text, feat_config);
    LocalExample ex;
    ex.bias = fv.bias;
    ex.label = u.observed_label;
    for (std::size_t i = 0; i < fv.size(); ++i) {
      ex.idx.push_back(index.intern(fv.indices[i]));
      ex.val.push_back(fv.values[i]);
    }
    labels.push_back(ex.label);
    train_ex.push_back(std::move(ex));
  }
  // Validation features never seen in training keep weight zero forever.
  std::vector<LocalExample> valid_ex;
  std::vector<SafetyLabel> valid_gold;
  for (const auto& u : valid_set) {
    const auto fv = featurize(u.text, feat_config);
    LocalExample ex;
    ex.bias = fv.bias;
    ex.label = u.observed_label;
    for (std::size_t i = 0; i < fv.size(); ++i) {
      if (const auto* local = index.find(fv.indices[i])) {
        ex.idx.push_back(*local);
        ex.val.push_back(fv.values[i]);
      }
    }
    valid_gold.push_back(ex.label);
    valid_ex.push_back(std::move(ex));
  }

  LinearModel model(feat_config);
  const bool both_classes =
      std::count(labels.begin(), labels.end(), SafetyLabel::Unsafe) > 0 &&
      std::count(labels.begin(), labels.end(), SafetyLabel::Safe) > 0;
  model.log_.single_class_warning = !both_classes;

  // Weights are stored as scale * v so L2 decay costs O(1) per step.
  const std::size_t n_local = index.globals().size();
  std::vector<double> v(n_local, 0.0);
  double scale = 1.0;
  double bias = 0.0;

  auto logit = [&](const LocalExample& ex) {
    double dot = 0.0;
    for (std::size_t i = 0; i < ex.idx.size(); ++i) dot += v[ex.idx[i]] * ex.val[i];
    return scale * dot + (ex.bias ? bias : 0.0);
  };

  std::vector<double> best_w(n_local, 0.0);
  double best_bias = 0.0;
  EpochRecord best_record{};
  bool have_best = false;
  int since_best = 0;

  Rng rng(derive_seed(cfg.seed, "train"));
  std::vector<double> grads;
  std::vector<SafetyLabel> valid_pred(valid_ex.size());
  const double decay = 1.0 - cfg.learning_rate * cfg.l2;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (const auto& batch : plan_epoch_batches(labels, cfg, rng)) {
      grads.assign(batch.size(), 0.0);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& ex = train_ex[batch[b]];
        const double p = sigmoid(logit(ex));
        grads[b] = loss_and_grad({1.0 - p, p}, ex.label, cfg.loss).grad[1];
      }
      scale *= decay;
      if (scale < 1e-6) {
        for (auto& w : v) w *= scale;
        scale = 1.0;
      }
      const double step = cfg.learning_rate / static_cast<double>(batch.size());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& ex = train_ex[batch[b]];
        const double g = step * grads[b];
        for (std::size_t i = 0; i < ex.idx.size(); ++i) v[ex.idx[i]] -= g * ex.val[i] / scale;
        if (ex.bias) bias -= g;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    std::array<double, 2> loss_sum{0.0, 0.0};
    std::array<std::size_t, 2> class_count{0, 0};
    for (std::size_t i = 0; i < valid_ex.size(); ++i) {
      const double p = std::clamp(sigmoid(logit(valid_ex[i])), kProbabilityEpsilon,
                                  1.0 - kProbabilityEpsilon);
      valid_pred[i] = p > 0.5 ? SafetyLabel::Unsafe : SafetyLabel::Safe;
      const auto c = static_cast<std::size_t>(as_int(valid_ex[i].label));
      loss_sum[c] += loss_and_grad({1.0 - p, p}, valid_ex[i].label, LossSpec::cross_entropy()).value;
      ++class_count[c];
    }
    rec.valid_loss = class_mean_loss(loss_sum, class_count);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < valid_ex.size(); ++i) correct += valid_pred[i] == valid_gold[i];
    rec.valid_accuracy = static_cast<double>(correct) / static_cast<double>(valid_ex.size());
    rec.valid_balanced_accuracy = try_balanced_accuracy(valid_pred, valid_gold)
                                      .value_or(std::numeric_limits<double>::quiet_NaN());
    model.log_.epochs.push_back(rec);

    if (!have_best || improves(rec, best_record)) {
      have_best = true;
      best_record = rec;
      for (std::size_t j = 0; j < n_local; ++j) best_w[j] = scale * v[j];
      best_bias = bias;
      model.log_.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  for (std::size_t j = 0; j < n_local; ++j) model.weights_[index.globals()[j]] = best_w[j];
  model.bias_ = best_bias;
  return model;
}

}  // namespace trollkit
