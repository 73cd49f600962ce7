#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "trollkit/error.hpp"
#include "trollkit/learner.hpp"

using namespace tk_test;

namespace {

std::array<double, 2> softmax(std::array<double, 2> z) {
  const double m = std::max(z[0], z[1]);
  const double a = std::exp(z[0] - m);
  const double b = std::exp(z[1] - m);
  return {a / (a + b), b / (a + b)};
}

double loss_at(std::array<double, 2> z, SafetyLabel t, const LossSpec& loss) {
  return loss_and_grad(softmax(z), t, loss).value;
}

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

TrainConfig quick(int max_epochs = 40) {
  TrainConfig c;
  c.max_epochs = max_epochs;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("featurize: empty text is bias only") {
  const auto x = featurize("", FeaturizerConfig{});
  CHECK(x.size() == 0);
  CHECK(x.bias);
  FeaturizerConfig no_bias;
  no_bias.include_bias = false;
  CHECK_FALSE(featurize("", no_bias).bias);
}

TEST_CASE("featurize: unigrams plus bigrams") {
  const auto x = featurize("a b", FeaturizerConfig{});
  CHECK(x.size() == 3);
  for (double v : x.values) CHECK(v == 1.0);
  CHECK(std::is_sorted(x.indices.begin(), x.indices.end()));
  FeaturizerConfig uni;
  uni.ngram_orders = {1};
  CHECK(featurize("a b", uni).size() == 2);
  CHECK(featurize("a a", uni).values == std::vector<double>{2.0});
}

TEST_CASE("featurize is deterministic and case-insensitive") {
  FeaturizerConfig cfg;
  CHECK(featurize("Zap the thing", cfg) == featurize("Zap the thing", cfg));
  CHECK(featurize("ZAP the THING", cfg) == featurize("zap the thing", cfg));
}

TEST_CASE("featurizer config is validated") {
  FeaturizerConfig cfg;
  cfg.dimension = 1000;
  CHECK_THROWS_AS(cfg.validate(), InvalidSpecError);
  cfg.dimension = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidSpecError);
  cfg.dimension = 2;
  cfg.ngram_orders = {};
  CHECK_THROWS_AS(cfg.validate(), InvalidSpecError);
}

TEST_CASE("loss values at known points") {
  const std::array<double, 2> half{0.5, 0.5};
  CHECK(loss_and_grad(half, SafetyLabel::Safe, LossSpec::soft_bootstrap(1.0)).value ==
        doctest::Approx(0.693147).epsilon(1e-5));
  CHECK(loss_and_grad(half, SafetyLabel::Safe, LossSpec::soft_bootstrap(0.0)).value ==
        doctest::Approx(0.693147).epsilon(1e-5));
  CHECK(loss_and_grad({0.8, 0.2}, SafetyLabel::Safe, LossSpec::soft_bootstrap(0.5)).value ==
        doctest::Approx(-(0.9 * std::log(0.8) + 0.1 * std::log(0.2))).epsilon(1e-9));
  CHECK(loss_and_grad({0.8, 0.2}, SafetyLabel::Safe, LossSpec::soft_bootstrap(0.5)).value ==
        doctest::Approx(0.3617).epsilon(1e-3));
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(2024);
  constexpr double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const std::array<double, 2> z{8.0 * rng.uniform() - 4.0, 8.0 * rng.uniform() - 4.0};
    const auto t = rng.bernoulli(0.5) ? SafetyLabel::Unsafe : SafetyLabel::Safe;
    const double beta = rng.uniform();
    for (const auto& loss : {LossSpec::cross_entropy(), LossSpec::soft_bootstrap(beta)}) {
      const auto analytic = loss_and_grad(softmax(z), t, loss).grad;
      for (int j = 0; j < 2; ++j) {
        auto up = z;
        auto down = z;
        up[j] += h;
        down[j] -= h;
        const double numeric = (loss_at(up, t, loss) - loss_at(down, t, loss)) / (2 * h);
        CHECK(rel_err(analytic[j], numeric) < 1e-4);
      }
    }
  }
}

TEST_CASE("soft bootstrap with beta 1 equals cross-entropy") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double p = 1e-6 + (1 - 2e-6) * rng.uniform();
    const std::array<double, 2> q{1 - p, p};
    const auto t = rng.bernoulli(0.5) ? SafetyLabel::Unsafe : SafetyLabel::Safe;
    const auto ce = loss_and_grad(q, t, LossSpec::cross_entropy());
    const auto sb = loss_and_grad(q, t, LossSpec::soft_bootstrap(1.0));
    CHECK(std::abs(ce.value - sb.value) <= 1e-12);
    CHECK(std::abs(ce.grad[0] - sb.grad[0]) <= 1e-12);
    CHECK(std::abs(ce.grad[1] - sb.grad[1]) <= 1e-12);
  }
}

TEST_CASE("soft bootstrap with beta 0 ignores the observed label") {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform();
    const std::array<double, 2> q{1 - p, p};
    const auto a = loss_and_grad(q, SafetyLabel::Safe, LossSpec::soft_bootstrap(0.0));
    const auto b = loss_and_grad(q, SafetyLabel::Unsafe, LossSpec::soft_bootstrap(0.0));
    CHECK(a.value == b.value);
    CHECK(a.grad == b.grad);
  }
}

TEST_CASE("train config is validated") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), InvalidSpecError);
  c = TrainConfig{};
  c.loss = LossSpec::soft_bootstrap(1.5);
  CHECK_THROWS_AS(c.validate(), InvalidSpecError);
  c = TrainConfig{};
  c.l2 = -1;
  CHECK_THROWS_AS(c.validate(), InvalidSpecError);
}

TEST_CASE("balanced batches hold |#pos - #neg| <= 1 over a full epoch") {
  Rng labels_rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + labels_rng.below(200);
    const double share = 0.02 + 0.5 * labels_rng.uniform();
    std::vector<SafetyLabel> labels(n);
    std::size_t pos = 0;
    for (auto& l : labels) {
      l = labels_rng.bernoulli(share) ? SafetyLabel::Unsafe : SafetyLabel::Safe;
      pos += l == SafetyLabel::Unsafe;
    }
    if (pos == 0 || pos == n) continue;
    TrainConfig cfg;
    cfg.batch_size = 2 * static_cast<int>(1 + labels_rng.below(10));
    Rng rng(trial);
    const auto batches = plan_epoch_batches(labels, cfg, rng);
    std::vector<std::size_t> seen(n, 0);
    for (const auto& b : batches) {
      CHECK(b.size() <= static_cast<std::size_t>(cfg.batch_size));
      long diff = 0;
      for (auto i : b) {
        diff += labels[i] == SafetyLabel::Unsafe ? 1 : -1;
        ++seen[i];
      }
      CHECK(std::abs(diff) <= 1);
    }
    // Majority examples appear exactly once; every minority example at least once.
    const bool pos_major = pos >= n - pos;
    for (std::size_t i = 0; i < n; ++i) {
      const bool major = (labels[i] == SafetyLabel::Unsafe) == pos_major;
      CHECK(seen[i] >= 1);
      if (major) CHECK(seen[i] == 1);
    }
  }
}

TEST_CASE("unbalanced batching visits every example once") {
  std::vector<SafetyLabel> labels(37, SafetyLabel::Safe);
  labels[3] = SafetyLabel::Unsafe;
  TrainConfig cfg;
  cfg.balanced_batches = false;
  Rng rng(1);
  std::size_t total = 0;
  for (const auto& b : plan_epoch_batches(labels, cfg, rng)) total += b.size();
  CHECK(total == 37);
}

TEST_CASE("zero weights predict 0.5") {
  LinearModel model;
  CHECK(model.predict_proba("anything at all") == 0.5);
  CHECK(model.predict("anything") == SafetyLabel::Safe);
}

TEST_CASE("probabilities are clamped") {
  LinearModel model;
  model.set_bias_weight(1e6);
  CHECK(model.predict_proba("x") <= 1.0 - kProbabilityEpsilon);
  model.set_bias_weight(-1e6);
  CHECK(model.predict_proba("x") >= kProbabilityEpsilon);
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("separable toy set is fit exactly") {
  const auto data = separable_set(20, "t");
  const auto model = train(data, data, FeaturizerConfig{}, quick(200));
  CHECK(model.is_finite());
  for (const auto& u : data) {
    CHECK(model.predict(u.text) == u.true_label);
    CHECK((model.predict_proba(u.text) > 0.5) == (u.observed_label == SafetyLabel::Unsafe));
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto inst = preset_instance(Preset::Troll, 3);
  const auto a = train(inst.train, inst.valid, FeaturizerConfig{}, quick());
  const auto b = train(inst.train, inst.valid, FeaturizerConfig{}, quick());
  CHECK(a.same_parameters(b));
  REQUIRE(a.log().epochs.size() == b.log().epochs.size());
  for (std::size_t i = 0; i < a.log().epochs.size(); ++i) {
    CHECK(a.log().epochs[i].valid_loss == b.log().epochs[i].valid_loss);
    CHECK(a.log().epochs[i].valid_accuracy == b.log().epochs[i].valid_accuracy);
  }
  CHECK(a.log().best_epoch == b.log().best_epoch);
  auto other = quick();
  other.seed = 6;
  CHECK_FALSE(a.same_parameters(train(inst.train, inst.valid, FeaturizerConfig{}, other)));
}

TEST_CASE("early stopping with valid == train and unlimited patience") {
  const auto data = separable_set(24, "e");
  auto cfg = quick(60);
  cfg.patience = TrainConfig::kUnlimitedPatience;
  const auto model = train(data, data, FeaturizerConfig{}, cfg);
  const auto& epochs = model.log().epochs;
  REQUIRE(epochs.size() == 60);
  // Oracle: the last epoch reached by a non-increasing loss step.
  int expected = epochs.front().epoch;
  for (std::size_t i = 1; i < epochs.size(); ++i)
    if (epochs[i].valid_loss <= epochs[i - 1].valid_loss) expected = epochs[i].epoch;
  CHECK(model.log().best_epoch == expected);
}

TEST_CASE("early stopping halts after patience epochs without improvement") {
  const auto data = separable_set(24, "p");
  auto cfg = quick(200);
  cfg.patience = 3;
  const auto model = train(data, data, FeaturizerConfig{}, cfg);
  const auto& log = model.log();
  if (static_cast<int>(log.epochs.size()) < 200)
    CHECK(log.epochs.back().epoch == log.best_epoch + 3);
}

TEST_CASE("single-class training data sets the warning flag") {
  std::vector<Utterance> data;
  for (int i = 0; i < 10; ++i)
    data.push_back(clean("s" + std::to_string(i), "u", "calm words", SafetyLabel::Safe));
  const auto model = train(data, data, FeaturizerConfig{}, quick(5));
  CHECK(model.log().single_class_warning);
  CHECK(model.is_finite());
  CHECK_THROWS_AS(train({}, data, FeaturizerConfig{}, quick(5)), DegenerateDataError);
}

TEST_CASE("model serialization round trip is exact") {
  const auto inst = preset_instance(Preset::Troll, 2);
  const auto model = train(inst.train, inst.valid, FeaturizerConfig{}, quick());
  const auto text = serialize_model(model);
  const auto back = deserialize_model(text);
  CHECK(back.same_parameters(model));
  CHECK(serialize_model(back) == text);
  for (const auto& u : inst.eval) CHECK(back.predict_proba(u.text) == model.predict_proba(u.text));

  TempDir dir("model");
  save_model(model, dir.path / "m.txt");
  CHECK(load_model(dir.path / "m.txt").same_parameters(model));

  CHECK_THROWS_AS(deserialize_model("not-a-model 1\n"), DataError);
  auto future = text;
  future.replace(future.find(" 1\n"), 3, " 9\n");
  CHECK_THROWS_AS(deserialize_model(future), VersionError);
}
