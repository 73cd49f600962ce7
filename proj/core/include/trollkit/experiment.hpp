#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trollkit/config.hpp"
#include "trollkit/mitigation.hpp"
#include "trollkit/noise.hpp"
#include "trollkit/report.hpp"

namespace trollkit {

/// Pool, clean eval set, and user population for one seed.
BenchmarkInstance make_instance(const ExperimentConfig& config, const PopulationSpec& population,
                                std::uint64_t seed);

/// One isolated unit of work: a population, an algorithm, and a seed.
struct TrialSpec {
  std::string troll_type;
  PopulationSpec population;  // seed is taken from `seed`
  Algorithm algorithm = Algorithm::Baseline;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
};

/// Outcome of one trial, with the corrections kept for auditing.
struct TrialOutcome {
  RunReport report;
  MitigationConfig chosen;
  CorrectedDataset train_corrections;
};

/// Hyperparameter candidates for an algorithm, drawn from the config grids.
std::vector<MitigationConfig> candidate_configs(Algorithm algorithm,
                                                const HyperparameterGrids& grids);

/// Builds the instance, selects hyperparameters on its validation split,
/// trains, and scores on the clean eval set. Module errors become an error
/// row instead of propagating.
TrialOutcome run_trial(const TrialSpec& trial, const ExperimentConfig& config);

/// Expands presets and named populations into trials (population-major,
/// then algorithm, then seed).
std::vector<TrialSpec> expand_trials(const ExperimentConfig& config);

struct ExperimentResult {
  std::vector<RunReport> runs;  // canonical order
  std::vector<AggregateRow> summary;
};

using TrialCallback = std::function<void(const TrialOutcome&)>;

/// Runs trials on `config.workers` threads. Results do not depend on the
/// worker count. The callback, if given, is invoked serially.
ExperimentResult run_trials(const std::vector<TrialSpec>& trials, const ExperimentConfig& config,
                            const TrialCallback& on_done = {});

ExperimentResult run_experiment(const ExperimentConfig& config, const TrialCallback& on_done = {});

/// Baseline training on 50/50 helper/troll mixes where level L is the
/// overall share of flipped labels (troll users flip at rate 2L); level 0 is
/// helpers only.
ExperimentResult noise_sweep(std::span<const double> levels, const ExperimentConfig& config,
                             const TrialCallback& on_done = {});

/// Writes the corrected train set as JSONL plus a JSON removal manifest.
void write_corrections(const std::filesystem::path& jsonl_path, const CorrectedDataset& corrected,
                       const MitigationConfig& chosen);

/// Label-policy rate used to tag a population in reports (1 for constant
/// policies, 0 for helpers only).
double population_noise_level(const PopulationSpec& population);

}  // namespace trollkit
