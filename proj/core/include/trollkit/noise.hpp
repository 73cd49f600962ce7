#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trollkit/corpus.hpp"
#include "trollkit/rng.hpp"

namespace trollkit {

/// p[a][b] is the probability that true label a is observed as b.
struct TransitionMatrix {
  std::array<std::array<double, 2>, 2> p{};

  bool is_row_stochastic(double tol = 1e-12) const;
  bool operator==(const TransitionMatrix&) const = default;
};

struct LabelPolicy {
  enum class Kind { Correct, Flip, Noisy, ConstantSafe, ConstantUnsafe };

  Kind kind = Kind::Correct;
  double rate = 0.0;  // used by Flip and Noisy only

  static LabelPolicy correct() { return {Kind::Correct, 0.0}; }
  static LabelPolicy flip(double rate) { return {Kind::Flip, rate}; }
  static LabelPolicy noisy(double rate) { return {Kind::Noisy, rate}; }
  static LabelPolicy constant_safe() { return {Kind::ConstantSafe, 0.0}; }
  static LabelPolicy constant_unsafe() { return {Kind::ConstantUnsafe, 0.0}; }

  bool has_rate() const { return kind == Kind::Flip || kind == Kind::Noisy; }
  void validate() const;
  bool operator==(const LabelPolicy&) const = default;
};

std::string_view to_string(LabelPolicy::Kind kind);

/// Noisy(N) is a uniform relabel of a fraction N, so half of it lands on the
/// right class: the off-diagonal mass is N/2.
TransitionMatrix transition_of(const LabelPolicy& policy);

SafetyLabel apply_policy(const LabelPolicy& policy, SafetyLabel true_label, Rng& rng);

enum class DifficultyFilter { StandardOnly, AdversarialOnly, Mixed };
enum class ClassFilter { Both, UnsafeOnly };

std::string_view to_string(DifficultyFilter f);
std::string_view to_string(ClassFilter f);

struct UserGroupSpec {
  std::string name;
  double ratio = 1.0;
  DifficultyFilter difficulty_filter = DifficultyFilter::StandardOnly;
  ClassFilter class_filter = ClassFilter::Both;
  LabelPolicy policy;

  bool is_troll() const { return policy.kind != LabelPolicy::Kind::Correct; }
  bool operator==(const UserGroupSpec&) const = default;
};

/// Normal distribution of utterances per user, truncated below and rounded.
struct UserSizeDistribution {
  double mean = 10.0;
  double sd = 2.0;
  std::size_t minimum = 1;
};

/// Rounded normal draw, clamped below at `minimum`.
std::size_t draw_user_size(const UserSizeDistribution& dist, Rng& rng);

struct PopulationSpec {
  std::vector<UserGroupSpec> groups;
  std::size_t train_size = 200;
  std::size_t valid_size = 24;
  UserSizeDistribution utterances_per_user;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BenchmarkInstance {
  std::vector<Utterance> train;
  std::vector<Utterance> valid;
  std::vector<Utterance> eval;
  std::map<std::string, std::string> user_groups;  // user_id -> group name
  std::set<std::string> troll_users;

  std::set<std::string> corrupted_ids(Split split) const;
};

/// Samples users until the train and valid budgets are met, then labels every
/// sampled utterance with its author's policy. Group membership is randomized
/// but balanced per split: after n users of a split, each group holds within
/// one user of ratio * n. Each user lives entirely in one split; the last user of a split
/// is truncated to fit.
BenchmarkInstance build_instance(const std::vector<Utterance>& pool, const PopulationSpec& spec,
                                 std::vector<Utterance> eval_set);

// --- Named user-model presets -------------------------------------------

/// The seven benchmark settings. Every troll preset is a 50/50 mix with helpers.
enum class Preset { HelperOnly, Troll, MasterTroll, LazyTroll, SafeTroll, UnsafeTroll, GaslightTroll };

inline constexpr double kDefaultTrollRate = 0.8;

std::string_view to_string(Preset p);
std::optional<Preset> preset_from_string(std::string_view name);
const std::vector<Preset>& all_presets();

UserGroupSpec helper_group();
/// The troll group of a preset; nullopt for HelperOnly.
std::optional<UserGroupSpec> troll_group(Preset preset, double rate = kDefaultTrollRate);
PopulationSpec preset_population(Preset preset, std::uint64_t seed,
                                 double rate = kDefaultTrollRate);

/// 50/50 helper / Flip(rate) troll mix (all helpers when rate is 0).
PopulationSpec flip_troll_population(double rate, std::uint64_t seed);

}  // namespace trollkit
