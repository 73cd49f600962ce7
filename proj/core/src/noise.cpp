#include "trollkit/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "trollkit/error.hpp"

namespace trollkit {

bool TransitionMatrix::is_row_stochastic(double tol) const {
  for (const auto& row : p) {
    for (double x : row)
      if (!(x >= 0.0 && x <= 1.0)) return false;
    if (std::abs(row[0] + row[1] - 1.0) > tol) return false;
  }
  return true;
}

void LabelPolicy::validate() const {
  if (has_rate() && !(rate >= 0.0 && rate <= 1.0))
    throw InvalidSpecError("label policy rate must lie in [0, 1]");
}

std::string_view to_string(LabelPolicy::Kind kind) {
  switch (kind) {
    case LabelPolicy::Kind::Correct: return "correct";
    case LabelPolicy::Kind::Flip: return "flip";
    case LabelPolicy::Kind::Noisy: return "noisy";
    case LabelPolicy::Kind::ConstantSafe: return "constant_safe";
    case LabelPolicy::Kind::ConstantUnsafe: return "constant_unsafe";
  }
  return "correct";
}

std::string_view to_string(DifficultyFilter f) {
  switch (f) {
    case DifficultyFilter::StandardOnly: return "standard_only";
    case DifficultyFilter::AdversarialOnly: return "adversarial_only";
    case DifficultyFilter::Mixed: return "mixed";
  }
  return "standard_only";
}

std::string_view to_string(ClassFilter f) {
  return f == ClassFilter::Both ? "both" : "unsafe_only";
}

TransitionMatrix transition_of(const LabelPolicy& policy) {
  using K = LabelPolicy::Kind;
  const double n = policy.rate;
  switch (policy.kind) {
    case K::Correct: return {{{{1.0, 0.0}, {0.0, 1.0}}}};
    case K::Flip: return {{{{1.0 - n, n}, {n, 1.0 - n}}}};
    case K::Noisy: return {{{{1.0 - n / 2.0, n / 2.0}, {n / 2.0, 1.0 - n / 2.0}}}};
    case K::ConstantSafe: return {{{{1.0, 0.0}, {1.0, 0.0}}}};
    case K::ConstantUnsafe: return {{{{0.0, 1.0}, {0.0, 1.0}}}};
  }
  return {};
}

SafetyLabel apply_policy(const LabelPolicy& policy, SafetyLabel true_label, Rng& rng) {
  const auto row = transition_of(policy).p[static_cast<std::size_t>(as_int(true_label))];
  // Degenerate rows consume no randomness, so identity policies leave the
  // stream untouched.
  if (row[1] >= 1.0) return SafetyLabel::Unsafe;
  if (row[1] <= 0.0) return SafetyLabel::Safe;
  return rng.uniform() < row[1] ? SafetyLabel::Unsafe : SafetyLabel::Safe;
}

void PopulationSpec::validate() const {
  if (groups.empty()) throw InvalidSpecError("population needs at least one user group");
  double total = 0.0;
  for (const auto& g : groups) {
    if (!(g.ratio >= 0.0 && g.ratio <= 1.0))
      throw InvalidSpecError("group \"" + g.name + "\" ratio must lie in [0, 1]");
    g.policy.validate();
    total += g.ratio;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidSpecError("group ratios must sum to 1");
  if (train_size < 1) throw InvalidSpecError("train_size must be at least 1");
  if (utterances_per_user.minimum < 1) throw InvalidSpecError("minimum user size must be >= 1");
}

std::set<std::string> BenchmarkInstance::corrupted_ids(Split split) const {
  const auto& data = split == Split::Valid ? valid : split == Split::Eval ? eval : train;
  std::set<std::string> out;
  for (const auto& u : data)
    if (u.corrupted) out.insert(u.id);
  return out;
}

namespace {

/// Pool indices bucketed by (difficulty, class), consumed without replacement.
class PoolCells {
 public:
  PoolCells(const std::vector<Utterance>& pool, Rng& rng) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& u = pool[i];
      cell(u.difficulty, u.true_label).push_back(i);
    }
    for (auto& c : cells_) rng.shuffle(std::span(c));
  }

  std::size_t take(Difficulty d, ClassFilter cf, Rng& rng, const UserGroupSpec& group) {
    auto& unsafe = cell(d, SafetyLabel::Unsafe);
    auto& safe = cell(d, SafetyLabel::Safe);
    std::vector<std::size_t>* from = &unsafe;
    if (cf == ClassFilter::Both) {
      const std::size_t total = unsafe.size() + safe.size();
      if (total == 0) exhausted(group, d, cf);
      from = rng.below(total) < unsafe.size() ? &unsafe : &safe;
    }
    if (from->empty()) exhausted(group, d, cf);
    const std::size_t idx = from->back();
    from->pop_back();
    return idx;
  }

 private:
  std::array<std::vector<std::size_t>, 4> cells_;

  std::vector<std::size_t>& cell(Difficulty d, SafetyLabel l) {
    return cells_[static_cast<std::size_t>(d) * 2 + static_cast<std::size_t>(as_int(l))];
  }

  [[noreturn]] static void exhausted(const UserGroupSpec& g, Difficulty d, ClassFilter cf) {
    throw GenerationError("pool exhausted for group \"" + g.name + "\" under filter " +
                          std::string(to_string(d)) + "/" + std::string(to_string(cf)));
  }
};

// Balanced randomization: each draw picks a group with probability
// proportional to how far its user count lags behind ratio * users, so every
// group stays within one user of its target share.
class GroupSchedule {
 public:
  explicit GroupSchedule(const std::vector<UserGroupSpec>& groups)
      : groups_(groups), counts_(groups.size(), 0) {}

  std::size_t next(Rng& rng) {
    const double n = static_cast<double>(drawn_ + 1);
    std::vector<double> deficit(groups_.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      deficit[i] = std::max(0.0, groups_[i].ratio * n - static_cast<double>(counts_[i]));
      total += deficit[i];
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = groups_.size();
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (deficit[i] <= 0.0) continue;
      pick = i;
      acc += deficit[i];
      if (u < acc) break;
    }
    ++counts_[pick];
    ++drawn_;
    return pick;
  }

 private:
  const std::vector<UserGroupSpec>& groups_;
  std::vector<std::size_t> counts_;
  std::size_t drawn_ = 0;
};

}  // namespace

std::size_t draw_user_size(const UserSizeDistribution& dist, Rng& rng) {
  const double x = std::round(dist.mean + dist.sd * rng.normal());
  return std::max(dist.minimum, static_cast<std::size_t>(std::max(0.0, x)));
}

BenchmarkInstance build_instance(const std::vector<Utterance>& pool, const PopulationSpec& spec,
                                 std::vector<Utterance> eval_set) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "population"));
  PoolCells cells(pool, rng);

  BenchmarkInstance inst;
  inst.eval = std::move(eval_set);
  for (auto& u : inst.eval) u.split = Split::Eval;

  std::size_t user_counter = 0;
  auto fill = [&](std::vector<Utterance>& out, std::size_t budget, Split split) {
    GroupSchedule schedule(spec.groups);
    while (out.size() < budget) {
      const auto& group = spec.groups[schedule.next(rng)];
      const std::size_t size = std::min(draw_user_size(spec.utterances_per_user, rng),
                                        budget - out.size());
      char uid[32];
      std::snprintf(uid, sizeof uid, "user-%04zu", user_counter++);
      inst.user_groups[uid] = group.name;
      if (group.is_troll()) inst.troll_users.insert(uid);

      for (std::size_t k = 0; k < size; ++k) {
        Difficulty d = Difficulty::Standard;
        switch (group.difficulty_filter) {
          case DifficultyFilter::StandardOnly: d = Difficulty::Standard; break;
          case DifficultyFilter::AdversarialOnly: d = Difficulty::Adversarial; break;
          case DifficultyFilter::Mixed:
            d = rng.bernoulli(0.5) ? Difficulty::Adversarial : Difficulty::Standard;
            break;
        }
        Utterance u = pool[cells.take(d, group.class_filter, rng, group)];
        u.user_id = uid;
        u.split = split;
        u.observe(apply_policy(group.policy, u.true_label, rng));
        out.push_back(std::move(u));
      }
    }
  };
  fill(inst.train, spec.train_size, Split::Train);
  fill(inst.valid, spec.valid_size, Split::Valid);
  return inst;
}

// --- presets --------------------------------------------------------------

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::HelperOnly: return "helper_only";
    case Preset::Troll: return "troll";
    case Preset::MasterTroll: return "master_troll";
    case Preset::LazyTroll: return "lazy_troll";
    case Preset::SafeTroll: return "safe_troll";
    case Preset::UnsafeTroll: return "unsafe_troll";
    case Preset::GaslightTroll: return "gaslight_troll";
  }
  return "helper_only";
}

const std::vector<Preset>& all_presets() {
  static const std::vector<Preset> presets = {
      Preset::HelperOnly, Preset::Troll,       Preset::MasterTroll,  Preset::SafeTroll,
      Preset::UnsafeTroll, Preset::LazyTroll, Preset::GaslightTroll};
  return presets;
}

std::optional<Preset> preset_from_string(std::string_view name) {
  for (auto p : all_presets())
    if (to_string(p) == name) return p;
  return std::nullopt;
}

UserGroupSpec helper_group() {
  return {"helper", 1.0, DifficultyFilter::StandardOnly, ClassFilter::Both, LabelPolicy::correct()};
}

std::optional<UserGroupSpec> troll_group(Preset preset, double rate) {
  using DF = DifficultyFilter;
  using CF = ClassFilter;
  const std::string name(to_string(preset));
  switch (preset) {
    case Preset::HelperOnly: return std::nullopt;
    case Preset::Troll: return UserGroupSpec{name, 0.5, DF::StandardOnly, CF::Both, LabelPolicy::flip(rate)};
    case Preset::MasterTroll:
      return UserGroupSpec{name, 0.5, DF::AdversarialOnly, CF::Both, LabelPolicy::flip(rate)};
    case Preset::LazyTroll:
      return UserGroupSpec{name, 0.5, DF::StandardOnly, CF::Both, LabelPolicy::noisy(rate)};
    case Preset::SafeTroll:
      return UserGroupSpec{name, 0.5, DF::Mixed, CF::Both, LabelPolicy::constant_safe()};
    case Preset::UnsafeTroll:
      return UserGroupSpec{name, 0.5, DF::Mixed, CF::Both, LabelPolicy::constant_unsafe()};
    case Preset::GaslightTroll:
      return UserGroupSpec{name, 0.5, DF::AdversarialOnly, CF::UnsafeOnly,
                           LabelPolicy::constant_safe()};
  }
  return std::nullopt;
}

PopulationSpec preset_population(Preset preset, std::uint64_t seed, double rate) {
  PopulationSpec spec;
  spec.seed = seed;
  auto helper = helper_group();
  if (auto troll = troll_group(preset, rate)) {
    helper.ratio = 0.5;
    spec.groups = {helper, *troll};
  } else {
    spec.groups = {helper};
  }
  return spec;
}

PopulationSpec flip_troll_population(double rate, std::uint64_t seed) {
  if (rate <= 0.0) return preset_population(Preset::HelperOnly, seed);
  return preset_population(Preset::Troll, seed, rate);
}

}  // namespace trollkit
