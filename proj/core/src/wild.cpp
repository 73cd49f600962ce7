#include "trollkit/wild.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "trollkit/error.hpp"
#include "trollkit/mitigation.hpp"
#include "trollkit/noise.hpp"

namespace trollkit {

namespace {

std::string fixed(double x, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  std::string s = buf;
  if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::vector<Utterance> generate_wild_set(const WildSpec& spec, const PoolSpec& pool_spec,
                                         std::uint64_t seed) {
  if (spec.users == 0) throw InvalidSpecError("wild set needs at least one user");
  for (double r : {spec.troll_user_fraction, spec.troll_low_quality, spec.helper_low_quality,
                   spec.adversarial_fraction})
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidSpecError("wild set rates must lie in [0, 1]");

  const auto vocab = Vocabulary::build(pool_spec.vocabulary_seed);
  Rng rng(derive_seed(seed, "wild-set"));
  const auto n_trolls = static_cast<std::size_t>(
      std::llround(spec.troll_user_fraction * static_cast<double>(spec.users)));

  std::vector<std::size_t> order(spec.users);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::vector<bool> is_troll(spec.users, false);
  for (std::size_t i = 0; i < n_trolls; ++i) is_troll[order[i]] = true;

  std::vector<Utterance> out;
  char buf[48];
  for (std::size_t u = 0; u < spec.users; ++u) {
    std::snprintf(buf, sizeof buf, "wild-user-%04zu", u);
    const std::string user = buf;
    const double low = is_troll[u] ? spec.troll_low_quality : spec.helper_low_quality;
    const std::size_t n = draw_user_size(spec.utterances_per_user, rng);
    for (std::size_t j = 0; j < n; ++j) {
      Utterance x;
      std::snprintf(buf, sizeof buf, "wild-%06zu", out.size());
      x.id = buf;
      x.user_id = user;
      x.true_label = rng.bernoulli(low) ? SafetyLabel::Unsafe : SafetyLabel::Safe;
      x.difficulty =
          rng.bernoulli(spec.adversarial_fraction) ? Difficulty::Adversarial : Difficulty::Standard;
      x.text = generate_text(vocab, x.true_label, x.difficulty, rng);
      x.split = Split::Pool;
      x.observe(SafetyLabel::Safe);
      out.push_back(std::move(x));
    }
  }
  return out;
}

LinearModel train_wild_model(const WildSpec& spec, const PoolSpec& pool_spec,
                             const FeaturizerConfig& feat, const TrainConfig& train_cfg,
                             std::uint64_t seed) {
  auto pool = generate_pool(pool_spec, derive_seed(seed, "wild-model-pool"));
  if (pool.size() < spec.model_train_size + spec.model_valid_size)
    throw InvalidSpecError("pool too small for the wild model's train and valid sizes");
  Rng rng(derive_seed(seed, "wild-model-split"));
  rng.shuffle(std::span(pool));
  std::vector<Utterance> tr(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.model_train_size));
  std::vector<Utterance> va(
      pool.begin() + static_cast<std::ptrdiff_t>(spec.model_train_size),
      pool.begin() + static_cast<std::ptrdiff_t>(spec.model_train_size + spec.model_valid_size));
  for (auto& x : tr) x.split = Split::Train;
  for (auto& x : va) x.split = Split::Valid;
  auto cfg = train_cfg;
  cfg.seed = derive_seed(seed, "wild-model-train");
  return train(tr, va, feat, cfg);
}

WildScoring score_wild(const LinearModel& model, const std::vector<Utterance>& data, double alpha,
                       std::span<const double> thresholds) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidSpecError("alpha must lie in [0, 1]");
  WildScoring out;
  out.alpha = alpha;

  // Records without an author cannot be grouped; each becomes its own user.
  std::vector<Utterance> grouped = data;
  std::size_t orphans = 0;
  for (auto& x : grouped) {
    if (!x.user_id.empty()) continue;
    x.user_id = "\x1f" + x.id;
    ++orphans;
  }
  if (orphans > 0)
    out.warnings.push_back(std::to_string(orphans) +
                           " record(s) without user_id scored as single-record users");

  std::map<std::string, double> f;
  for (const auto& x : grouped) f[x.id] = 1.0 - model.predict_proba(x.text);
  const auto trust = combine_user_trust(grouped, f, alpha);

  out.records.reserve(data.size());
  for (const auto& x : data) {
    const auto& t = trust.by_id.at(x.id);
    out.records.push_back({x.user_id, x.id, x.text, t.f, t.g, t.combined, 0});
  }
  std::vector<std::size_t> order(out.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = out.records[a];
    const auto& rb = out.records[b];
    if (ra.combined != rb.combined) return ra.combined < rb.combined;
    return ra.id < rb.id;
  });
  for (std::size_t r = 0; r < order.size(); ++r) out.records[order[r]].rank = r + 1;

  const bool annotated =
      std::all_of(data.begin(), data.end(), [](const Utterance& x) { return x.annotated; });
  if (annotated) {
    std::map<std::string, double> combined;
    std::set<std::string> low_quality;
    for (const auto& r : out.records) combined[r.id] = r.combined;
    for (const auto& x : data)
      if (x.corrupted) low_quality.insert(x.id);
    if (thresholds.empty()) {
      const auto all = exhaustive_thresholds(combined);
      out.curve = pr_curve(combined, low_quality, all);
    } else {
      out.curve = pr_curve(combined, low_quality, thresholds);
    }
  }
  return out;
}

std::vector<AlphaPoint> alpha_sweep(const LinearModel& model, const std::vector<Utterance>& data,
                                    std::span<const double> alphas) {
  std::vector<AlphaPoint> out;
  for (double a : alphas) {
    auto scoring = score_wild(model, data, a);
    if (!scoring.curve) throw UnsupportedModeError("alpha sweep needs gold quality labels");
    out.push_back({a, average_precision(*scoring.curve), std::move(*scoring.curve)});
  }
  return out;
}

std::string render_wild_csv(const WildScoring& scoring) {
  std::string s = "user_id,id,text,score_f,score_g,combined,rank\n";
  for (const auto& r : scoring.records) {
    s += csv_field(r.user_id) + ',' + csv_field(r.id) + ',' + csv_field(r.text) + ',' +
         fixed(r.score_f, "%.9f") + ',' + fixed(r.score_g, "%.9f") + ',' +
         fixed(r.combined, "%.9f") + ',' + std::to_string(r.rank) + '\n';
  }
  return s;
}

std::string render_pr_csv(const PRCurve& curve) {
  std::string s = "threshold,precision,precision_empty,recall,recall_empty,removed,hits\n";
  for (const auto& p : curve.points) {
    const auto& d = p.detection;
    s += fixed(p.threshold, "%.9f") + ',' + fixed(d.precision_or_zero()) + ',' +
         (d.precision ? "0" : "1") + ',' + fixed(d.recall_or_zero()) + ',' +
         (d.recall ? "0" : "1") + ',' + std::to_string(d.removed_count) + ',' +
         std::to_string(d.hit_count) + '\n';
  }
  return s;
}

}  // namespace trollkit
