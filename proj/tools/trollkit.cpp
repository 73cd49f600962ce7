// trollkit command-line driver.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trollkit/config.hpp"
#include "trollkit/error.hpp"
#include "trollkit/experiment.hpp"
#include "trollkit/report.hpp"
#include "trollkit/wild.hpp"

namespace fs = std::filesystem;
using namespace trollkit;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2, kRuntimeError = 3 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  std::optional<std::size_t> workers;
  std::vector<std::string> presets;
  std::vector<std::string> algorithms;
  std::optional<double> alpha, beta, theta, tau;
  std::optional<std::size_t> k;
  bool no_wall_time = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "JSON experiment config");
  app->add_option("--seed", o.seed, "Single seed");
  app->add_option("--seeds", o.seeds, "Seed range N..M (inclusive)");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--workers", o.workers, "Worker threads");
  app->add_option("--preset", o.presets, "Preset name (repeatable)");
  app->add_option("--algorithm", o.algorithms, "Algorithm name (repeatable)");
  app->add_option("--alpha", o.alpha, "Fix Soft PURR alpha");
  app->add_option("--beta", o.beta, "Fix soft bootstrap beta");
  app->add_option("--theta", o.theta, "Fix per-user removal threshold");
  app->add_option("--tau", o.tau, "Fix Soft PURR removal threshold");
  app->add_option("--k", o.k, "Cross-validation folds");
  app->add_flag("--no-wall-time", o.no_wall_time, "Write 0 for wall_time (byte-stable reports)");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed && !o.seeds.empty()) throw ConfigError("--seed and --seeds are mutually exclusive");
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.seeds.empty()) cfg.seeds = parse_seed_range(o.seeds);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.presets.empty()) {
    cfg.presets = o.presets;
    cfg.populations.clear();
  }
  if (!o.algorithms.empty()) {
    cfg.algorithms.clear();
    for (const auto& name : o.algorithms) {
      const auto a = algorithm_from_string(name);
      if (!a) throw ConfigError("unknown algorithm \"" + name + "\"");
      cfg.algorithms.push_back(*a);
    }
  }
  if (o.alpha) cfg.grids.alpha = {*o.alpha};
  if (o.beta) cfg.grids.beta = {*o.beta};
  if (o.theta) cfg.grids.theta = {*o.theta};
  if (o.tau) cfg.grids.tau = {*o.tau};
  if (o.k) cfg.k = *o.k;
  if (o.no_wall_time) cfg.record_wall_time = false;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void write_results(const fs::path& dir, const ExperimentResult& r) {
  write_text(dir / "reports.csv", render_reports_csv(r.runs));
  write_text(dir / "summary.csv", render_summary_csv(r.summary));
  write_text(dir / "summary.md", render_summary_table(r.summary));
}

std::size_t count_failed(const ExperimentResult& r) {
  std::size_t n = 0;
  for (const auto& x : r.runs) n += x.failed();
  return n;
}

TrialCallback progress(std::size_t total) {
  auto done = std::make_shared<std::size_t>(0);
  return [done, total](const TrialOutcome& t) {
    ++*done;
    const auto& r = t.report;
    std::fprintf(stderr, "[%zu/%zu] %s %s seed=%llu %s\n", *done, total, r.troll_type.c_str(),
                 r.algorithm.c_str(), static_cast<unsigned long long>(r.seed),
                 r.failed() ? ("error: " + r.error).c_str()
                            : ("error_rate=" + std::to_string(r.error_rate)).c_str());
  };
}

// --- subcommands --------------------------------------------------------------

int cmd_generate(const CommonOptions& o, bool wild, bool with_pool) {
  auto cfg = resolve(o);
  const fs::path dir = cfg.output;
  const auto seed = cfg.seeds.front();
  if (wild) {
    auto data = generate_wild_set(cfg.wild, cfg.pool_spec, seed);
    write_text(dir / "wild.jsonl", render_dataset(data));
    const auto model = train_wild_model(cfg.wild, cfg.pool_spec, cfg.feat, cfg.train, seed);
    write_text(dir / "model.txt", serialize_model(model));
    std::fprintf(stderr, "wrote %zu wild records and model to %s\n", data.size(),
                 dir.string().c_str());
    return kOk;
  }
  auto trials = expand_trials(cfg);
  if (trials.empty()) throw ConfigError("no population selected");
  const auto& pop = trials.front().population;
  const auto inst = make_instance(cfg, pop, seed);
  write_text(dir / "train.jsonl", render_dataset(inst.train));
  write_text(dir / "valid.jsonl", render_dataset(inst.valid));
  write_text(dir / "eval.jsonl", render_dataset(inst.eval));
  if (with_pool) write_text(dir / "pool.jsonl", render_dataset(generate_pool(cfg.pool_spec, seed)));
  std::fprintf(stderr, "%s seed=%llu: %zu train, %zu valid, %zu eval, %zu troll users\n",
               trials.front().troll_type.c_str(), static_cast<unsigned long long>(seed),
               inst.train.size(), inst.valid.size(), inst.eval.size(), inst.troll_users.size());
  return kOk;
}

int cmd_run(const CommonOptions& o, bool save_corrections) {
  auto cfg = resolve(o);
  const fs::path dir = cfg.output;
  const auto trials = expand_trials(cfg);
  auto report_progress = progress(trials.size());
  TrialCallback cb = [&](const TrialOutcome& t) {
    report_progress(t);
    if (!save_corrections || t.report.failed()) return;
    const auto name = t.report.troll_type + "_" + t.report.algorithm + "_" +
                      std::to_string(t.report.seed) + ".jsonl";
    fs::create_directories(dir / "corrections");
    write_corrections(dir / "corrections" / name, t.train_corrections, t.chosen);
  };
  const auto result = run_trials(trials, cfg, cb);
  write_results(dir, result);
  std::cout << render_summary_table(result.summary);
  const auto failed = count_failed(result);
  if (failed > 0) std::fprintf(stderr, "%zu run(s) failed; see the error column\n", failed);
  return kOk;
}

int cmd_sweep(const CommonOptions& o, const std::string& mode, const std::vector<double>& levels,
              const std::string& model_path, const std::string& data_path) {
  auto cfg = resolve(o);
  const fs::path dir = cfg.output;
  if (mode == "noise") {
    if (!levels.empty()) cfg.noise_levels = levels;
    const auto result = noise_sweep(cfg.noise_levels, cfg,
                                    progress(cfg.noise_levels.size() * cfg.seeds.size()));
    write_results(dir, result);
    std::cout << render_summary_table(result.summary);
    return kOk;
  }
  if (mode != "alpha") throw ConfigError("sweep mode must be noise or alpha");

  const auto seed = cfg.seeds.front();
  const auto data = data_path.empty() ? generate_wild_set(cfg.wild, cfg.pool_spec, seed)
                                      : read_dataset(data_path, ReadMode::Wild);
  const auto model = model_path.empty()
                         ? train_wild_model(cfg.wild, cfg.pool_spec, cfg.feat, cfg.train, seed)
                         : load_model(model_path);
  const auto points = alpha_sweep(model, data, cfg.grids.alpha);
  std::string table = "alpha,average_precision\n";
  for (const auto& p : points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", p.alpha, p.average_precision);
    table += buf;
    std::snprintf(buf, sizeof buf, "pr_alpha_%.2f.csv", p.alpha);
    write_text(dir / buf, render_pr_csv(p.curve));
  }
  write_text(dir / "alpha_sweep.csv", table);
  std::cout << table;
  return kOk;
}

int cmd_score(const CommonOptions& o, const std::string& model_path, const std::string& data_path,
              std::vector<double> thresholds) {
  auto cfg = resolve(o);
  if (model_path.empty() || data_path.empty()) throw ConfigError("score needs --model and --data");
  if (cfg.grids.alpha.size() != 1 && !o.alpha)
    throw ConfigError("score needs a single --alpha");
  const double alpha = o.alpha ? *o.alpha : cfg.grids.alpha.front();
  const auto model = load_model(model_path);
  const auto data = read_dataset(data_path, ReadMode::Wild);
  const auto scoring = score_wild(model, data, alpha, thresholds);
  for (const auto& w : scoring.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const fs::path dir = cfg.output;
  write_text(dir / "scores.csv", render_wild_csv(scoring));
  if (scoring.curve) {
    write_text(dir / "pr.csv", render_pr_csv(*scoring.curve));
    std::printf("average_precision=%.6f\n", average_precision(*scoring.curve));
  }
  return kOk;
}

int cmd_report(const CommonOptions& o, const std::vector<std::string>& inputs) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  if (paths.empty()) throw ConfigError("report needs at least one report CSV");
  const auto merged = aggregate_reports(paths);
  if (!o.out.empty()) {
    const fs::path dir = o.out;
    write_text(dir / "reports.csv", render_reports_csv(merged.runs));
    write_text(dir / "summary.csv", render_summary_csv(merged.summary));
    write_text(dir / "summary.md", render_summary_table(merged.summary));
  }
  std::cout << render_summary_table(merged.summary);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Troll-robust safety classifier training and evaluation"};
  app.require_subcommand(1);

  CommonOptions gen_o, run_o, sweep_o, score_o, report_o;

  auto* gen = app.add_subcommand("generate", "Write a benchmark instance or a wild set");
  add_common(gen, gen_o);
  bool gen_wild = false;
  bool gen_pool = false;
  gen->add_flag("--wild", gen_wild, "Write a wild set and its safety model instead");
  gen->add_flag("--pool", gen_pool, "Also write the full pool");

  auto* run = app.add_subcommand("run", "Run the preset x algorithm x seed matrix");
  add_common(run, run_o);
  bool save_corrections = false;
  run->add_flag("--save-corrections", save_corrections,
                "Write each run's corrected train set and removal manifest");

  auto* sweep = app.add_subcommand("sweep", "Noise-level or alpha sweep");
  add_common(sweep, sweep_o);
  std::string sweep_mode = "noise";
  std::vector<double> levels;
  std::string sweep_model, sweep_data;
  sweep->add_option("--mode", sweep_mode, "noise or alpha")->check(CLI::IsMember({"noise", "alpha"}));
  sweep->add_option("--levels", levels, "Noise levels in [0, 0.5]");
  sweep->add_option("--model", sweep_model, "Safety model for the alpha sweep");
  sweep->add_option("--data", sweep_data, "Wild JSONL for the alpha sweep");

  auto* score = app.add_subcommand("score", "Zero-shot trust scoring of wild data");
  add_common(score, score_o);
  std::string score_model, score_data;
  std::vector<double> thresholds;
  score->add_option("--model", score_model, "Safety model file")->required();
  score->add_option("--data", score_data, "Wild JSONL file")->required();
  score->add_option("--thresholds", thresholds, "PR thresholds (default: all achievable)");

  auto* report = app.add_subcommand("report", "Merge and aggregate report CSVs");
  add_common(report, report_o);
  std::vector<std::string> inputs;
  report->add_option("reports", inputs, "Report CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(gen_o, gen_wild, gen_pool);
    if (*run) return cmd_run(run_o, save_corrections);
    if (*sweep) return cmd_sweep(sweep_o, sweep_mode, levels, sweep_model, sweep_data);
    if (*score) return cmd_score(score_o, score_model, score_data, thresholds);
    if (*report) return cmd_report(report_o, inputs);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const DegenerateDataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kRuntimeError;
}
