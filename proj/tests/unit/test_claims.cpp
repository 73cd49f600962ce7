// Ten-seed behavioral checks on the default benchmark sizes.

#include <doctest.h>

#include <map>

#include "support.hpp"

using namespace tk_test;

namespace {

struct Runs {
  std::map<std::pair<std::string, std::string>, AggregateRow> summary;
  double troll_user_recall = 0.0;  // per-user removal, mean over seeds

  static const Runs& get() {
    static const Runs r = compute();
    return r;
  }

  double error(const std::string& type, Algorithm alg) const {
    return summary.at({type, std::string(to_string(alg))}).error_rate.mean;
  }

 private:
  static Runs compute() {
    ExperimentConfig cfg;
    cfg.record_wall_time = false;
    cfg.presets = {"troll"};
    cfg.algorithms = all_algorithms();
    auto trials = expand_trials(cfg);
    cfg.presets = {"helper_only"};
    cfg.algorithms = {Algorithm::Baseline, Algorithm::PerExampleRemove, Algorithm::SoftBootstrap};
    for (auto& t : expand_trials(cfg)) trials.push_back(std::move(t));

    Runs out;
    double recall_sum = 0.0;
    std::size_t recall_n = 0;
    const auto result = run_trials(trials, cfg, [&](const TrialOutcome& o) {
      if (o.report.troll_type != "troll" || o.report.algorithm != "per_user_remove") return;
      const auto inst = make_instance(cfg, preset_population(Preset::Troll, 0), o.report.seed);
      std::set<std::string> train_trolls;
      for (const auto& u : inst.train)
        if (inst.troll_users.contains(u.user_id)) train_trolls.insert(u.user_id);
      std::size_t hit = 0;
      for (const auto& user : o.train_corrections.removed_users) hit += train_trolls.contains(user);
      recall_sum += static_cast<double>(hit) / static_cast<double>(train_trolls.size());
      ++recall_n;
    });
    for (const auto& row : result.summary) out.summary[{row.troll_type, row.algorithm}] = row;
    out.troll_user_recall = recall_sum / static_cast<double>(recall_n);
    return out;
  }
};

}  // namespace

TEST_CASE("helper-only: per-example removal stays within 2 points of baseline") {
  const auto& r = Runs::get();
  CHECK(std::abs(r.error("helper_only", Algorithm::PerExampleRemove) -
                 r.error("helper_only", Algorithm::Baseline)) <= 0.02);
}

TEST_CASE("helper-only: soft bootstrap stays within 2 points of baseline") {
  const auto& r = Runs::get();
  CHECK(std::abs(r.error("helper_only", Algorithm::SoftBootstrap) -
                 r.error("helper_only", Algorithm::Baseline)) <= 0.02);
}

TEST_CASE("troll: per-example removal beats baseline") {
  const auto& r = Runs::get();
  CHECK(r.error("troll", Algorithm::PerExampleRemove) < r.error("troll", Algorithm::Baseline));
}

TEST_CASE("troll: Soft PURR beats baseline") {
  const auto& r = Runs::get();
  CHECK(r.error("troll", Algorithm::SoftPURR) < r.error("troll", Algorithm::Baseline));
}

TEST_CASE("troll: oracle beats baseline") {
  const auto& r = Runs::get();
  CHECK(r.error("troll", Algorithm::Oracle) < r.error("troll", Algorithm::Baseline));
}

TEST_CASE("troll: per-user removal finds more than half of the troll users") {
  CHECK(Runs::get().troll_user_recall > 0.5);
}

TEST_CASE("troll: oracle is at least as good as every other algorithm") {
  const auto& r = Runs::get();
  const double oracle = r.error("troll", Algorithm::Oracle);
  for (auto a : all_algorithms()) {
    CAPTURE(to_string(a));
    CHECK(oracle <= r.error("troll", a));
  }
}

TEST_CASE("troll: per-user+example is no worse than either removal method") {
  const auto& r = Runs::get();
  const double pue = r.error("troll", Algorithm::PerUserPlusExample);
  CHECK(pue <= r.error("troll", Algorithm::PerExampleRemove));
  CHECK(pue <= r.error("troll", Algorithm::PerUserRemove));
}
