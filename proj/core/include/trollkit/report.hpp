#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trollkit {

inline constexpr std::string_view kReportSchema = "# trollkit-report v1";

/// One (population, algorithm, seed) trial. A failed trial keeps its
/// identifying fields, zero metrics, and a non-empty `error`.
struct RunReport {
  std::string algorithm;
  std::string troll_type;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  double balanced_accuracy = 0.0;
  double error_rate = 0.0;
  double troll_precision = 0.0;
  bool troll_precision_empty = true;
  double troll_recall = 0.0;
  bool troll_recall_empty = true;
  std::size_t examples_removed = 0;
  std::size_t examples_flipped = 0;
  std::size_t users_removed = 0;
  std::string chosen_hyperparameters;
  double wall_time = 0.0;
  std::string error;

  bool failed() const { return !error.empty(); }
  bool operator==(const RunReport&) const = default;
};

/// Schema line, header row, then one row per report in the given order.
/// Metrics use fixed six-decimal formatting.
std::string render_reports_csv(const std::vector<RunReport>& reports);

/// One CSV row without the trailing newline.
std::string render_report_row(const RunReport& report);

/// Throws VersionError if the schema line or header does not match.
std::vector<RunReport> parse_reports_csv(std::string_view csv);

/// Canonical order: troll_type, algorithm, noise_level, seed.
void sort_reports(std::vector<RunReport>& reports);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
};

MeanSd mean_sd(const std::vector<double>& values);

struct AggregateRow {
  std::string troll_type;
  std::string algorithm;
  double noise_level = 0.0;
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  MeanSd balanced_accuracy;
  MeanSd error_rate;
  MeanSd troll_precision;  // over runs where precision is defined
  bool troll_precision_empty = true;
  MeanSd troll_recall;
  bool troll_recall_empty = true;
  MeanSd examples_removed;
  MeanSd examples_flipped;
  MeanSd users_removed;
};

/// Mean and standard deviation per (troll_type, algorithm, noise_level),
/// in canonical order. Failed runs are counted but not averaged.
std::vector<AggregateRow> aggregate(const std::vector<RunReport>& reports);

std::string render_summary_csv(const std::vector<AggregateRow>& rows);

/// Human-readable error-rate table: algorithms down, troll types across.
std::string render_summary_table(const std::vector<AggregateRow>& rows);

struct AggregateOutput {
  std::vector<RunReport> runs;  // canonical order
  std::vector<AggregateRow> summary;
};

/// Reads report CSV files, merges and sorts them, and aggregates.
AggregateOutput aggregate_reports(const std::vector<std::filesystem::path>& paths);

}  // namespace trollkit
