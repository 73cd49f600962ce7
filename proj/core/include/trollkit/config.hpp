#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trollkit/corpus.hpp"
#include "trollkit/learner.hpp"
#include "trollkit/mitigation.hpp"
#include "trollkit/noise.hpp"

namespace trollkit {

/// Hyperparameter values tried per run; the winner is picked on the
/// (noisy) validation split.
struct HyperparameterGrids {
  std::vector<double> theta{0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<double> alpha{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> tau{0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<double> beta{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
};

/// A user mixture given by name in the config file rather than as a preset.
struct NamedPopulation {
  std::string name;
  PopulationSpec spec;  // seed is overwritten per run
};

struct WildSpec {
  std::size_t users = 60;
  double troll_user_fraction = 0.3;
  double troll_low_quality = 0.8;   // share of a troll user's texts that are unsafe
  double helper_low_quality = 0.05;
  double adversarial_fraction = 0.5;  // share of texts drawn adversarial
  UserSizeDistribution utterances_per_user;
  std::size_t model_train_size = 2000;
  std::size_t model_valid_size = 500;
};

struct ExperimentConfig {
  PoolSpec pool_spec;
  std::vector<std::string> presets{"troll"};
  std::vector<NamedPopulation> populations;
  std::vector<Algorithm> algorithms{Algorithm::Baseline};
  FeaturizerConfig feat;
  TrainConfig train;
  std::size_t k = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  HyperparameterGrids grids;
  double troll_rate = kDefaultTrollRate;
  std::size_t train_size = 200;
  std::size_t valid_size = 24;
  std::size_t eval_unsafe = 100;
  std::size_t eval_safe = 900;
  std::vector<double> noise_levels{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  WildSpec wild;
  std::string output = "out";
  std::size_t workers = 1;
  bool record_wall_time = true;

  /// Throws ConfigError on invalid values (including unknown preset names).
  void validate() const;

  PipelineConfig pipeline() const { return {feat, train, k}; }
};

/// Parses the JSON config document. Keys mirror the ExperimentConfig field
/// names; unknown keys are rejected with ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string render_config(const ExperimentConfig& config);

/// Parses "N" or "N..M" (inclusive).
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

}  // namespace trollkit
