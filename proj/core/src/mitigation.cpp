#include "trollkit/mitigation.hpp"

#include <algorithm>

#include "trollkit/error.hpp"

namespace trollkit {

namespace {

std::vector<Utterance> concat(const std::vector<Utterance>& a, const std::vector<Utterance>& b) {
  std::vector<Utterance> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::map<std::string, double> score_with(const LinearModel& model,
                                         const std::vector<Utterance>& data) {
  std::map<std::string, double> p;
  for (const auto& u : data) p[u.id] = model.predict_proba(u.text);
  return p;
}

CorrectedDataset keep_all(const std::vector<Utterance>& data) {
  CorrectedDataset c;
  c.kept = data;
  return c;
}

/// A correction may empty the validation split; early stopping then falls
/// back to the uncorrected split.
const std::vector<Utterance>& usable_valid(const CorrectedDataset& corrected,
                                           const std::vector<Utterance>& original) {
  return corrected.kept.empty() ? original : corrected.kept;
}

void require_nonempty(const CorrectedDataset& c, std::string_view algorithm) {
  if (c.kept.empty())
    throw DegenerateDataError(std::string(algorithm) + " removed every training example");
}

CorrectedDataset remove_users(const std::vector<Utterance>& data,
                              const std::map<std::string, double>& p, double theta) {
  CorrectedDataset c;
  const auto frac = user_disagreement(data, p);
  for (const auto& [user, f] : frac)
    if (f > theta) c.removed_users.insert(user);
  for (const auto& u : data) {
    if (c.removed_users.contains(u.user_id))
      c.removed_ids.insert(u.id);
    else
      c.kept.push_back(u);
  }
  return c;
}

/// Applies per-example removal to the survivors of a user-level pass and
/// merges the bookkeeping.
CorrectedDataset then_remove_examples(CorrectedDataset users,
                                      const std::map<std::string, double>& p) {
  auto ex = correct_per_example(users.kept, p, CorrectionMode::Remove);
  ex.removed_ids.insert(users.removed_ids.begin(), users.removed_ids.end());
  ex.removed_users = std::move(users.removed_users);
  return ex;
}

const OofPredictions& ensure_oof(const BenchmarkInstance& inst, const PipelineConfig& cfg,
                                 const OofPredictions* given, OofPredictions& storage) {
  if (given) return *given;
  storage = oof_predict(inst.train, inst.valid, cfg.k, cfg.feat, cfg.train);
  return storage;
}

}  // namespace

// --- out-of-fold prediction ---------------------------------------------------

OofPredictions oof_predict(const std::vector<Utterance>& train_set,
                           const std::vector<Utterance>& valid_set, std::size_t k,
                           const FeaturizerConfig& feat, const TrainConfig& train_cfg) {
  if (k < 2) throw ConfigError("fold count k must be at least 2");
  std::vector<std::string> users;
  for (const auto& u : train_set) users.push_back(u.user_id);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  if (users.size() < k)
    throw FoldError("cannot split " + std::to_string(users.size()) + " users into " +
                    std::to_string(k) + " folds");

  Rng rng(derive_seed(train_cfg.seed, "folds"));
  rng.shuffle(std::span(users));

  OofPredictions oof;
  oof.k = k;
  for (std::size_t i = 0; i < users.size(); ++i) oof.fold_of_user[users[i]] = i % k;
  oof.fold_training_users.resize(k);
  for (const auto& valid_u : valid_set) oof.valid_p[valid_u.id] = 0.0;

  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<Utterance> fit;
    std::vector<const Utterance*> held;
    for (const auto& u : train_set) {
      if (oof.fold_of_user.at(u.user_id) == fold) {
        held.push_back(&u);
      } else {
        fit.push_back(u);
        oof.fold_training_users[fold].insert(u.user_id);
      }
    }
    const auto model = train(fit, valid_set, feat, train_cfg);
    for (const auto* u : held) oof.p[u->id] = model.predict_proba(u->text);
    for (const auto& u : valid_set) oof.valid_p[u.id] += model.predict_proba(u.text);
  }
  for (auto& [_, p] : oof.valid_p) p /= static_cast<double>(k);
  return oof;
}

// --- corrections ------------------------------------------------------------------

std::set<std::string> CorrectedDataset::flagged_ids() const {
  auto out = removed_ids;
  out.insert(flipped_ids.begin(), flipped_ids.end());
  return out;
}

void CorrectedDataset::check_invariants() const {
  std::set<std::string> kept_ids;
  for (const auto& u : kept) kept_ids.insert(u.id);
  for (const auto& id : removed_ids)
    if (kept_ids.contains(id)) throw IntegrityError("example " + id + " is both kept and removed");
  for (const auto& id : flipped_ids)
    if (!kept_ids.contains(id)) throw IntegrityError("flipped example " + id + " is not kept");
}

CorrectedDataset correct_per_example(const std::vector<Utterance>& data,
                                     const std::map<std::string, double>& p, CorrectionMode mode) {
  CorrectedDataset c;
  for (const auto& u : data) {
    const auto it = p.find(u.id);
    if (it == p.end()) throw IntegrityError("no prediction for example " + u.id);
    if (!disagrees(it->second, u.observed_label)) {
      c.kept.push_back(u);
    } else if (mode == CorrectionMode::Remove) {
      c.removed_ids.insert(u.id);
    } else {
      auto fixed = u;
      fixed.observe(flipped(u.observed_label));
      c.flipped_ids.insert(u.id);
      c.kept.push_back(std::move(fixed));
    }
  }
  return c;
}

std::map<std::string, double> user_disagreement(const std::vector<Utterance>& data,
                                                const std::map<std::string, double>& p) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // (disagree, total)
  for (const auto& u : data) {
    const auto it = p.find(u.id);
    if (it == p.end()) throw IntegrityError("no prediction for example " + u.id);
    auto& [bad, total] = counts[u.user_id];
    bad += disagrees(it->second, u.observed_label);
    ++total;
  }
  std::map<std::string, double> frac;
  for (const auto& [user, c] : counts)
    frac[user] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return frac;
}

TrustScores combine_user_trust(const std::vector<Utterance>& data,
                               const std::map<std::string, double>& f, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  std::map<std::string, std::pair<double, std::size_t>> per_user;  // (sum f, count)
  for (const auto& u : data) {
    const auto it = f.find(u.id);
    if (it == f.end()) throw IntegrityError("no trust score for example " + u.id);
    auto& [sum, n] = per_user[u.user_id];
    sum += it->second;
    ++n;
  }
  TrustScores out;
  out.alpha = alpha;
  for (const auto& u : data) {
    TrustScore s;
    s.f = f.at(u.id);
    const auto& [sum, n] = per_user.at(u.user_id);
    s.g = n > 1 ? (sum - s.f) / static_cast<double>(n - 1) : kEmptyUserTrust;
    s.combined = alpha * s.f + (1.0 - alpha) * s.g;
    out.by_id[u.id] = s;
  }
  return out;
}

TrustScores purr_scores(const std::vector<Utterance>& data, const std::map<std::string, double>& p,
                        double alpha) {
  std::map<std::string, double> f;
  for (const auto& u : data) {
    const auto it = p.find(u.id);
    if (it == p.end()) throw IntegrityError("no prediction for example " + u.id);
    const double y = u.observed_label == SafetyLabel::Unsafe ? 1.0 : 0.0;
    f[u.id] = y * it->second + (1.0 - y) * (1.0 - it->second);
  }
  return combine_user_trust(data, f, alpha);
}

// --- algorithms ----------------------------------------------------------------

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Baseline: return "baseline";
    case Algorithm::PerExampleFlip: return "per_example_flip";
    case Algorithm::PerExampleRemove: return "per_example_remove";
    case Algorithm::SoftBootstrap: return "soft_bootstrap";
    case Algorithm::PerUserRemove: return "per_user_remove";
    case Algorithm::PerUserPlusExample: return "per_user_plus_example";
    case Algorithm::SoftPURR: return "soft_purr";
    case Algorithm::Oracle: return "oracle";
  }
  return "baseline";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algs = {
      Algorithm::Oracle,        Algorithm::Baseline,      Algorithm::PerExampleFlip,
      Algorithm::PerExampleRemove, Algorithm::SoftBootstrap, Algorithm::PerUserRemove,
      Algorithm::PerUserPlusExample, Algorithm::SoftPURR};
  return algs;
}

std::optional<Algorithm> algorithm_from_string(std::string_view name) {
  for (auto a : all_algorithms())
    if (to_string(a) == name) return a;
  return std::nullopt;
}

bool uses_oof(Algorithm a) {
  switch (a) {
    case Algorithm::PerExampleFlip:
    case Algorithm::PerExampleRemove:
    case Algorithm::PerUserRemove:
    case Algorithm::PerUserPlusExample:
    case Algorithm::SoftPURR: return true;
    default: return false;
  }
}

void MitigationConfig::validate() const {
  auto unit = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  unit(beta, "beta");
  unit(theta, "theta");
  unit(alpha, "alpha");
  unit(tau, "tau");
}

MitigationResult run_baseline(const BenchmarkInstance& inst, const PipelineConfig& cfg) {
  return {train(inst.train, inst.valid, cfg.feat, cfg.train), keep_all(inst.train),
          keep_all(inst.valid)};
}

MitigationResult run_per_example_pipeline(const BenchmarkInstance& inst, CorrectionMode mode,
                                          const PipelineConfig& cfg, const OofPredictions* given) {
  OofPredictions storage;
  const auto& oof = ensure_oof(inst, cfg, given, storage);

  auto train_fix = correct_per_example(inst.train, oof.p, mode);
  require_nonempty(train_fix, "per-example correction");

  const auto step3 = train(train_fix.kept, inst.valid, cfg.feat, cfg.train);
  auto valid_fix = correct_per_example(inst.valid, score_with(step3, inst.valid), mode);

  const auto& valid = usable_valid(valid_fix, inst.valid);
  auto model = train(concat(train_fix.kept, valid), valid, cfg.feat, cfg.train);
  return {std::move(model), std::move(train_fix), std::move(valid_fix)};
}

LinearModel run_soft_bootstrap(const BenchmarkInstance& inst, double beta,
                               const PipelineConfig& cfg) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  auto tc = cfg.train;
  tc.loss = LossSpec::soft_bootstrap(beta);
  return train(inst.train, inst.valid, cfg.feat, tc);
}

MitigationResult run_per_user_removal(const BenchmarkInstance& inst, double theta,
                                      const PipelineConfig& cfg, const OofPredictions* given) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  OofPredictions storage;
  const auto& oof = ensure_oof(inst, cfg, given, storage);

  auto train_fix = remove_users(inst.train, oof.p, theta);
  if (train_fix.kept.empty()) throw DegenerateDataError("per-user removal rejected every user");
  auto valid_fix = remove_users(inst.valid, oof.valid_p, theta);

  auto model = train(train_fix.kept, usable_valid(valid_fix, inst.valid), cfg.feat, cfg.train);
  return {std::move(model), std::move(train_fix), std::move(valid_fix)};
}

MitigationResult run_per_user_plus_example(const BenchmarkInstance& inst, double theta,
                                           const PipelineConfig& cfg,
                                           const OofPredictions* given) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  OofPredictions storage;
  const auto& oof = ensure_oof(inst, cfg, given, storage);

  auto train_fix = then_remove_examples(remove_users(inst.train, oof.p, theta), oof.p);
  require_nonempty(train_fix, "per-user+example removal");

  const auto step3 = train(train_fix.kept, inst.valid, cfg.feat, cfg.train);
  auto valid_fix = then_remove_examples(remove_users(inst.valid, oof.valid_p, theta),
                                        score_with(step3, inst.valid));

  const auto& valid = usable_valid(valid_fix, inst.valid);
  auto model = train(concat(train_fix.kept, valid), valid, cfg.feat, cfg.train);
  return {std::move(model), std::move(train_fix), std::move(valid_fix)};
}

MitigationResult run_soft_purr(const BenchmarkInstance& inst, double alpha, double tau,
                               const PipelineConfig& cfg, const OofPredictions* given) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  OofPredictions storage;
  const auto& oof = ensure_oof(inst, cfg, given, storage);

  const auto scores = purr_scores(inst.train, oof.p, alpha);
  CorrectedDataset train_fix;
  for (const auto& u : inst.train) {
    if (scores.by_id.at(u.id).combined < tau)
      train_fix.removed_ids.insert(u.id);
    else
      train_fix.kept.push_back(u);
  }
  require_nonempty(train_fix, "soft PURR");

  auto model = train(train_fix.kept, inst.valid, cfg.feat, cfg.train);
  return {std::move(model), std::move(train_fix), keep_all(inst.valid)};
}

MitigationResult oracle_filter(const BenchmarkInstance& inst, const PipelineConfig& cfg) {
  auto clean = [](const std::vector<Utterance>& data) {
    CorrectedDataset c;
    for (const auto& u : data) {
      if (!u.annotated)
        throw UnsupportedModeError("oracle filtering needs corruption annotations");
      if (u.corrupted)
        c.removed_ids.insert(u.id);
      else
        c.kept.push_back(u);
    }
    return c;
  };
  auto train_fix = clean(inst.train);
  auto valid_fix = clean(inst.valid);
  require_nonempty(train_fix, "oracle filtering");
  // With every validation example corrupted, stop early on the clean train set.
  const auto& valid = valid_fix.kept.empty() ? train_fix.kept : valid_fix.kept;
  auto model = train(train_fix.kept, valid, cfg.feat, cfg.train);
  return {std::move(model), std::move(train_fix), std::move(valid_fix)};
}

MitigationResult run_mitigation(const BenchmarkInstance& inst, const MitigationConfig& mc,
                                const PipelineConfig& cfg, const OofPredictions* oof) {
  mc.validate();
  switch (mc.algorithm) {
    case Algorithm::Baseline: return run_baseline(inst, cfg);
    case Algorithm::PerExampleFlip:
      return run_per_example_pipeline(inst, CorrectionMode::Flip, cfg, oof);
    case Algorithm::PerExampleRemove:
      return run_per_example_pipeline(inst, CorrectionMode::Remove, cfg, oof);
    case Algorithm::SoftBootstrap:
      return {run_soft_bootstrap(inst, mc.beta, cfg), keep_all(inst.train), keep_all(inst.valid)};
    case Algorithm::PerUserRemove: return run_per_user_removal(inst, mc.theta, cfg, oof);
    case Algorithm::PerUserPlusExample: return run_per_user_plus_example(inst, mc.theta, cfg, oof);
    case Algorithm::SoftPURR: return run_soft_purr(inst, mc.alpha, mc.tau, cfg, oof);
    case Algorithm::Oracle: return oracle_filter(inst, cfg);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace trollkit
