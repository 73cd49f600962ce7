#include "trollkit/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trollkit/error.hpp"

namespace trollkit {

namespace {

using json = nlohmann::ordered_json;

/// Reads fields from a JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, _] : obj_.items())
      if (!used_.contains(key)) throw ConfigError("unknown key \"" + key + "\" in " + where_);
  }

  const json* get(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const auto* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError(where_ + "." + key + " has the wrong type");
      }
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> used_;
};

DifficultyFilter parse_difficulty_filter(const std::string& s) {
  for (auto f : {DifficultyFilter::StandardOnly, DifficultyFilter::AdversarialOnly,
                 DifficultyFilter::Mixed})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown difficulty_filter \"" + s + "\"");
}

ClassFilter parse_class_filter(const std::string& s) {
  for (auto f : {ClassFilter::Both, ClassFilter::UnsafeOnly})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown class_filter \"" + s + "\"");
}

LabelPolicy parse_policy(const json& j, const std::string& where) {
  Fields f(j, where);
  std::string kind = "correct";
  LabelPolicy p;
  f.read("kind", kind);
  f.read("rate", p.rate);
  using K = LabelPolicy::Kind;
  bool found = false;
  for (auto k : {K::Correct, K::Flip, K::Noisy, K::ConstantSafe, K::ConstantUnsafe})
    if (to_string(k) == kind) {
      p.kind = k;
      found = true;
    }
  if (!found) throw ConfigError("unknown label policy kind \"" + kind + "\"");
  return p;
}

UserSizeDistribution parse_user_size(const json& j, const std::string& where) {
  Fields f(j, where);
  UserSizeDistribution d;
  f.read("mean", d.mean);
  f.read("sd", d.sd);
  f.read("minimum", d.minimum);
  return d;
}

NamedPopulation parse_population(const json& j, const std::string& where) {
  Fields f(j, where);
  NamedPopulation pop;
  f.read("name", pop.name);
  if (pop.name.empty()) throw ConfigError(where + ".name is required");
  f.read("train_size", pop.spec.train_size);
  f.read("valid_size", pop.spec.valid_size);
  if (const auto* u = f.get("utterances_per_user"))
    pop.spec.utterances_per_user = parse_user_size(*u, where + ".utterances_per_user");
  const auto* groups = f.get("groups");
  if (!groups || !groups->is_array()) throw ConfigError(where + ".groups must be a list");
  for (std::size_t i = 0; i < groups->size(); ++i) {
    const std::string gw = where + ".groups[" + std::to_string(i) + "]";
    Fields g((*groups)[i], gw);
    UserGroupSpec spec;
    std::string df = "standard_only";
    std::string cf = "both";
    g.read("name", spec.name);
    g.read("ratio", spec.ratio);
    g.read("difficulty_filter", df);
    g.read("class_filter", cf);
    spec.difficulty_filter = parse_difficulty_filter(df);
    spec.class_filter = parse_class_filter(cf);
    if (const auto* p = g.get("policy")) spec.policy = parse_policy(*p, gw + ".policy");
    pop.spec.groups.push_back(std::move(spec));
  }
  return pop;
}

}  // namespace

void ExperimentConfig::validate() const {
  pool_spec.validate();
  feat.validate();
  train.validate();
  if (k < 2) throw ConfigError("k must be at least 2");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  for (const auto& p : presets)
    if (!preset_from_string(p)) throw ConfigError("unknown preset \"" + p + "\"");
  for (const auto& p : populations) {
    auto spec = p.spec;
    spec.validate();
  }
  if (algorithms.empty()) throw ConfigError("algorithms must be non-empty");
  auto unit_grid = [](const std::vector<double>& g, const char* name) {
    if (g.empty()) throw ConfigError(std::string("grid ") + name + " must be non-empty");
    for (double x : g)
      if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string("grid ") + name + " out of [0, 1]");
  };
  unit_grid(grids.theta, "theta");
  unit_grid(grids.alpha, "alpha");
  unit_grid(grids.tau, "tau");
  unit_grid(grids.beta, "beta");
  if (!(troll_rate >= 0.0 && troll_rate <= 1.0)) throw ConfigError("troll_rate must lie in [0, 1]");
  for (double l : noise_levels)
    if (!(l >= 0.0 && l <= 0.5)) throw ConfigError("noise levels must lie in [0, 0.5]");
  if (train_size < 1 || valid_size < 1) throw ConfigError("train_size and valid_size must be >= 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  {
    Fields f(root, "config");
    if (const auto* p = f.get("pool_spec")) {
      Fields ps(*p, "pool_spec");
      ps.read("size", cfg.pool_spec.size);
      ps.read("unsafe_fraction", cfg.pool_spec.unsafe_fraction);
      ps.read("adversarial_fraction", cfg.pool_spec.adversarial_fraction);
      ps.read("vocabulary_seed", cfg.pool_spec.vocabulary_seed);
    }
    f.read("presets", cfg.presets);
    if (const auto* pops = f.get("populations")) {
      if (!pops->is_array()) throw ConfigError("populations must be a list");
      for (std::size_t i = 0; i < pops->size(); ++i)
        cfg.populations.push_back(
            parse_population((*pops)[i], "populations[" + std::to_string(i) + "]"));
    }
    std::vector<std::string> algs;
    f.read("algorithms", algs);
    if (f.get("algorithms")) {
      cfg.algorithms.clear();
      for (const auto& a : algs) {
        const auto alg = algorithm_from_string(a);
        if (!alg) throw ConfigError("unknown algorithm \"" + a + "\"");
        cfg.algorithms.push_back(*alg);
      }
    }
    if (const auto* p = f.get("feat")) {
      Fields ff(*p, "feat");
      ff.read("ngram_orders", cfg.feat.ngram_orders);
      ff.read("dimension", cfg.feat.dimension);
      ff.read("include_bias", cfg.feat.include_bias);
    }
    if (const auto* p = f.get("train")) {
      Fields tf(*p, "train");
      tf.read("learning_rate", cfg.train.learning_rate);
      tf.read("max_epochs", cfg.train.max_epochs);
      tf.read("patience", cfg.train.patience);
      tf.read("batch_size", cfg.train.batch_size);
      tf.read("balanced_batches", cfg.train.balanced_batches);
      tf.read("l2", cfg.train.l2);
    }
    f.read("k", cfg.k);
    f.read("seeds", cfg.seeds);
    if (const auto* p = f.get("grids")) {
      Fields gf(*p, "grids");
      gf.read("theta", cfg.grids.theta);
      gf.read("alpha", cfg.grids.alpha);
      gf.read("tau", cfg.grids.tau);
      gf.read("beta", cfg.grids.beta);
    }
    f.read("troll_rate", cfg.troll_rate);
    f.read("train_size", cfg.train_size);
    f.read("valid_size", cfg.valid_size);
    f.read("eval_unsafe", cfg.eval_unsafe);
    f.read("eval_safe", cfg.eval_safe);
    f.read("noise_levels", cfg.noise_levels);
    if (const auto* p = f.get("wild")) {
      Fields wf(*p, "wild");
      wf.read("users", cfg.wild.users);
      wf.read("troll_user_fraction", cfg.wild.troll_user_fraction);
      wf.read("troll_low_quality", cfg.wild.troll_low_quality);
      wf.read("helper_low_quality", cfg.wild.helper_low_quality);
      wf.read("adversarial_fraction", cfg.wild.adversarial_fraction);
      wf.read("model_train_size", cfg.wild.model_train_size);
      wf.read("model_valid_size", cfg.wild.model_valid_size);
      if (const auto* u = wf.get("utterances_per_user"))
        cfg.wild.utterances_per_user = parse_user_size(*u, "wild.utterances_per_user");
    }
    f.read("output", cfg.output);
    f.read("workers", cfg.workers);
    f.read("record_wall_time", cfg.record_wall_time);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string render_config(const ExperimentConfig& c) {
  json j;
  j["pool_spec"] = {{"size", c.pool_spec.size},
                    {"unsafe_fraction", c.pool_spec.unsafe_fraction},
                    {"adversarial_fraction", c.pool_spec.adversarial_fraction},
                    {"vocabulary_seed", c.pool_spec.vocabulary_seed}};
  j["presets"] = c.presets;
  json pops = json::array();
  for (const auto& p : c.populations) {
    json groups = json::array();
    for (const auto& g : p.spec.groups)
      groups.push_back({{"name", g.name},
                        {"ratio", g.ratio},
                        {"difficulty_filter", std::string(to_string(g.difficulty_filter))},
                        {"class_filter", std::string(to_string(g.class_filter))},
                        {"policy",
                         {{"kind", std::string(to_string(g.policy.kind))}, {"rate", g.policy.rate}}}});
    pops.push_back({{"name", p.name},
                    {"train_size", p.spec.train_size},
                    {"valid_size", p.spec.valid_size},
                    {"utterances_per_user",
                     {{"mean", p.spec.utterances_per_user.mean},
                      {"sd", p.spec.utterances_per_user.sd},
                      {"minimum", p.spec.utterances_per_user.minimum}}},
                    {"groups", groups}});
  }
  j["populations"] = pops;
  json algs = json::array();
  for (auto a : c.algorithms) algs.push_back(std::string(to_string(a)));
  j["algorithms"] = algs;
  j["feat"] = {{"ngram_orders", c.feat.ngram_orders},
               {"dimension", c.feat.dimension},
               {"include_bias", c.feat.include_bias}};
  j["train"] = {{"learning_rate", c.train.learning_rate}, {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience},           {"batch_size", c.train.batch_size},
                {"balanced_batches", c.train.balanced_batches}, {"l2", c.train.l2}};
  j["k"] = c.k;
  j["seeds"] = c.seeds;
  j["grids"] = {{"theta", c.grids.theta},
                {"alpha", c.grids.alpha},
                {"tau", c.grids.tau},
                {"beta", c.grids.beta}};
  j["troll_rate"] = c.troll_rate;
  j["train_size"] = c.train_size;
  j["valid_size"] = c.valid_size;
  j["eval_unsafe"] = c.eval_unsafe;
  j["eval_safe"] = c.eval_safe;
  j["noise_levels"] = c.noise_levels;
  j["wild"] = {{"users", c.wild.users},
               {"troll_user_fraction", c.wild.troll_user_fraction},
               {"troll_low_quality", c.wild.troll_low_quality},
               {"helper_low_quality", c.wild.helper_low_quality},
               {"adversarial_fraction", c.wild.adversarial_fraction},
               {"model_train_size", c.wild.model_train_size},
               {"model_valid_size", c.wild.model_valid_size},
               {"utterances_per_user",
                {{"mean", c.wild.utterances_per_user.mean},
                 {"sd", c.wild.utterances_per_user.sd},
                 {"minimum", c.wild.utterances_per_user.minimum}}}};
  j["output"] = c.output;
  j["workers"] = c.workers;
  j["record_wall_time"] = c.record_wall_time;
  return j.dump(2) + "\n";
}

std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  auto parse_one = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
      throw ConfigError("bad seed \"" + std::string(text) + "\"");
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) return {parse_one(text)};
  const auto lo = parse_one(text.substr(0, dots));
  const auto hi = parse_one(text.substr(dots + 2));
  if (hi < lo) throw ConfigError("seed range \"" + std::string(text) + "\" is empty");
  std::vector<std::uint64_t> seeds;
  for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  return seeds;
}

}  // namespace trollkit
