#include "trollkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "trollkit/error.hpp"
#include "trollkit/eval.hpp"

namespace trollkit {

namespace {

std::string fmt_param(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string describe(const MitigationConfig& mc) {
  switch (mc.algorithm) {
    case Algorithm::SoftBootstrap: return "beta=" + fmt_param(mc.beta);
    case Algorithm::PerUserRemove:
    case Algorithm::PerUserPlusExample: return "theta=" + fmt_param(mc.theta);
    case Algorithm::SoftPURR: return "alpha=" + fmt_param(mc.alpha) + ";tau=" + fmt_param(mc.tau);
    default: return "";
  }
}

/// Model-selection score on the noisy validation split: balanced accuracy
/// (plain accuracy if it has one observed class), then ROC AUC. AUC only
/// looks at the ranking, so it does not punish a confident model for
/// disagreeing with flipped validation labels the way loss would.
struct Selection {
  double primary = -1.0;
  double auc = -1.0;

  bool beats(const Selection& o) const {
    if (primary != o.primary) return primary > o.primary;
    return auc > o.auc;
  }
};

Selection score_on_valid(const LinearModel& model, const std::vector<Utterance>& valid) {
  std::vector<SafetyLabel> pred;
  std::vector<SafetyLabel> gold;
  std::vector<double> scores;
  std::size_t correct = 0;
  for (const auto& u : valid) {
    const double p = model.predict_proba(u.text);
    scores.push_back(p);
    pred.push_back(p > 0.5 ? SafetyLabel::Unsafe : SafetyLabel::Safe);
    gold.push_back(u.observed_label);
    correct += pred.back() == gold.back();
  }
  Selection s;
  s.primary = try_balanced_accuracy(pred, gold)
                  .value_or(static_cast<double>(correct) / static_cast<double>(valid.size()));
  s.auc = roc_auc(scores, gold).value_or(0.0);
  return s;
}

}  // namespace

BenchmarkInstance make_instance(const ExperimentConfig& config, const PopulationSpec& population,
                                std::uint64_t seed) {
  auto pool = generate_pool(config.pool_spec, seed);
  auto split = split_eval(std::move(pool), config.eval_unsafe, config.eval_safe, seed);
  auto spec = population;
  spec.seed = seed;
  return build_instance(split.remaining, spec, std::move(split.eval));
}

std::vector<MitigationConfig> candidate_configs(Algorithm algorithm,
                                                const HyperparameterGrids& grids) {
  std::vector<MitigationConfig> out;
  MitigationConfig base;
  base.algorithm = algorithm;
  switch (algorithm) {
    case Algorithm::SoftBootstrap:
      for (double b : grids.beta) {
        base.beta = b;
        out.push_back(base);
      }
      break;
    case Algorithm::PerUserRemove:
    case Algorithm::PerUserPlusExample:
      for (double t : grids.theta) {
        base.theta = t;
        out.push_back(base);
      }
      break;
    case Algorithm::SoftPURR:
      for (double a : grids.alpha)
        for (double t : grids.tau) {
          base.alpha = a;
          base.tau = t;
          out.push_back(base);
        }
      break;
    default: out.push_back(base);
  }
  return out;
}

double population_noise_level(const PopulationSpec& population) {
  double level = 0.0;
  for (const auto& g : population.groups) {
    if (!g.is_troll()) continue;
    level = std::max(level, g.policy.has_rate() ? g.policy.rate : 1.0);
  }
  return level;
}

TrialOutcome run_trial(const TrialSpec& trial, const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  TrialOutcome out;
  auto& r = out.report;
  r.algorithm = std::string(to_string(trial.algorithm));
  r.troll_type = trial.troll_type;
  r.noise_level = trial.noise_level;
  r.seed = trial.seed;

  try {
    const auto inst = make_instance(config, trial.population, trial.seed);
    auto cfg = config.pipeline();
    cfg.train.seed = trial.seed;

    OofPredictions oof;
    const bool need_oof = uses_oof(trial.algorithm);
    if (need_oof) oof = oof_predict(inst.train, inst.valid, cfg.k, cfg.feat, cfg.train);

    std::optional<MitigationResult> best;
    Selection best_score;
    std::string last_error;
    for (const auto& mc : candidate_configs(trial.algorithm, config.grids)) {
      try {
        auto result = run_mitigation(inst, mc, cfg, need_oof ? &oof : nullptr);
        const auto score = score_on_valid(result.model, inst.valid);
        if (!best || score.beats(best_score)) {
          best = std::move(result);
          best_score = score;
          out.chosen = mc;
        }
      } catch (const DegenerateDataError& e) {
        last_error = e.what();
      }
    }
    if (!best) throw DegenerateDataError(last_error);

    std::vector<SafetyLabel> pred;
    std::vector<SafetyLabel> gold;
    for (const auto& u : inst.eval) {
      pred.push_back(best->model.predict(u.text));
      gold.push_back(u.true_label);
    }
    r.balanced_accuracy = balanced_accuracy(pred, gold);
    r.error_rate = 1.0 - r.balanced_accuracy;

    best->train.check_invariants();
    best->valid.check_invariants();
    const auto det = detection_metrics(best->train.flagged_ids(), inst.corrupted_ids(Split::Train));
    r.troll_precision = det.precision_or_zero();
    r.troll_precision_empty = !det.precision.has_value();
    r.troll_recall = det.recall_or_zero();
    r.troll_recall_empty = !det.recall.has_value();
    r.examples_removed = best->train.removed_ids.size();
    r.examples_flipped = best->train.flipped_ids.size();
    r.users_removed = best->train.removed_users.size();
    r.chosen_hyperparameters = describe(out.chosen);
    out.train_corrections = std::move(best->train);
  } catch (const std::exception& e) {
    const auto keep = r;
    r = RunReport{};
    r.algorithm = keep.algorithm;
    r.troll_type = keep.troll_type;
    r.noise_level = keep.noise_level;
    r.seed = keep.seed;
    r.error = e.what();
    if (r.error.empty()) r.error = "unknown error";
  }

  if (config.record_wall_time)
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::vector<TrialSpec> expand_trials(const ExperimentConfig& config) {
  std::vector<TrialSpec> trials;
  auto add = [&](const std::string& name, const PopulationSpec& pop) {
    for (auto alg : config.algorithms)
      for (auto seed : config.seeds)
        trials.push_back({name, pop, alg, seed, population_noise_level(pop)});
  };
  for (const auto& name : config.presets) {
    const auto preset = preset_from_string(name);
    if (!preset) throw ConfigError("unknown preset \"" + name + "\"");
    auto pop = preset_population(*preset, 0, config.troll_rate);
    pop.train_size = config.train_size;
    pop.valid_size = config.valid_size;
    add(name, pop);
  }
  for (const auto& named : config.populations) add(named.name, named.spec);
  return trials;
}

ExperimentResult run_trials(const std::vector<TrialSpec>& trials, const ExperimentConfig& config,
                            const TrialCallback& on_done) {
  config.validate();
  std::vector<RunReport> reports(trials.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < trials.size(); i = next++) {
      auto outcome = run_trial(trials[i], config);
      if (on_done) {
        std::lock_guard lock(callback_mutex);
        on_done(outcome);
      }
      reports[i] = std::move(outcome.report);
    }
  };

  const std::size_t n_threads = std::min(config.workers, std::max<std::size_t>(1, trials.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  ExperimentResult result;
  result.runs = std::move(reports);
  sort_reports(result.runs);
  // Aggregate what a reader of the CSV would see, so `report` reproduces it.
  result.summary = aggregate(parse_reports_csv(render_reports_csv(result.runs)));
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const TrialCallback& on_done) {
  return run_trials(expand_trials(config), config, on_done);
}

ExperimentResult noise_sweep(std::span<const double> levels, const ExperimentConfig& config,
                             const TrialCallback& on_done) {
  std::vector<TrialSpec> trials;
  for (double level : levels) {
    if (!(level >= 0.0 && level <= 0.5)) throw ConfigError("noise levels must lie in [0, 0.5]");
    auto pop = flip_troll_population(2.0 * level, 0);
    pop.train_size = config.train_size;
    pop.valid_size = config.valid_size;
    for (auto seed : config.seeds)
      trials.push_back({"troll_sweep", pop, Algorithm::Baseline, seed, level});
  }
  return run_trials(trials, config, on_done);
}

void write_corrections(const std::filesystem::path& jsonl_path, const CorrectedDataset& corrected,
                       const MitigationConfig& chosen) {
  write_dataset(corrected.kept, jsonl_path);
  nlohmann::ordered_json manifest;
  manifest["algorithm"] = std::string(to_string(chosen.algorithm));
  manifest["params"] = {{"beta", chosen.beta},
                        {"theta", chosen.theta},
                        {"alpha", chosen.alpha},
                        {"tau", chosen.tau}};
  // std::set iterates in sorted order, so the manifest is order-independent.
  manifest["removed_ids"] = corrected.removed_ids;
  manifest["flipped_ids"] = corrected.flipped_ids;
  manifest["removed_users"] = corrected.removed_users;
  auto path = jsonl_path;
  path.replace_extension(".manifest.json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace trollkit
