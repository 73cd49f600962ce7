#include "trollkit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <set>
#include <tuple>

#include "trollkit/error.hpp"
#include "trollkit/mitigation.hpp"

namespace trollkit {

namespace {

constexpr std::string_view kHeader =
    "algorithm,troll_type,noise_level,seed,balanced_accuracy,error_rate,troll_precision,"
    "troll_precision_empty,troll_recall,troll_recall_empty,examples_removed,examples_flipped,"
    "users_removed,chosen_hyperparameters,wall_time,error";

constexpr std::string_view kSummaryHeader =
    "troll_type,algorithm,noise_level,runs,failed_runs,balanced_accuracy_mean,"
    "balanced_accuracy_sd,error_rate_mean,error_rate_sd,troll_precision_mean,troll_precision_sd,"
    "troll_precision_empty,troll_recall_mean,troll_recall_sd,troll_recall_empty,"
    "examples_removed_mean,examples_removed_sd,examples_flipped_mean,examples_flipped_sd,"
    "users_removed_mean,users_removed_sd";

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits CSV text into records, honoring quoted fields.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (in_quotes) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw ParseError(line, "bad number \"" + s + "\"");
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw ParseError(line, "bad integer \"" + s + "\"");
  return v;
}

bool parse_flag(const std::string& s, std::size_t line) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw ParseError(line, "flag must be 0 or 1, got \"" + s + "\"");
}

auto report_key(const RunReport& r) {
  return std::tie(r.troll_type, r.algorithm, r.noise_level, r.seed);
}

int algorithm_rank(const std::string& name) {
  const auto& algs = all_algorithms();
  for (std::size_t i = 0; i < algs.size(); ++i)
    if (to_string(algs[i]) == name) return static_cast<int>(i);
  return static_cast<int>(algs.size());
}

}  // namespace

std::string render_report_row(const RunReport& r) {
  return quote(r.algorithm) + ',' + quote(r.troll_type) + ',' + fixed(r.noise_level) + ',' +
         std::to_string(r.seed) + ',' + fixed(r.balanced_accuracy) + ',' + fixed(r.error_rate) +
         ',' + fixed(r.troll_precision) + ',' + (r.troll_precision_empty ? "1" : "0") + ',' +
         fixed(r.troll_recall) + ',' + (r.troll_recall_empty ? "1" : "0") + ',' +
         std::to_string(r.examples_removed) + ',' + std::to_string(r.examples_flipped) + ',' +
         std::to_string(r.users_removed) + ',' + quote(r.chosen_hyperparameters) + ',' +
         fixed(r.wall_time, 3) + ',' + quote(r.error);
}

std::string render_reports_csv(const std::vector<RunReport>& reports) {
  std::string out(kReportSchema);
  out += '\n';
  out += kHeader;
  out += '\n';
  for (const auto& r : reports) {
    out += render_report_row(r);
    out += '\n';
  }
  return out;
}

std::vector<RunReport> parse_reports_csv(std::string_view csv) {
  const auto rows = split_csv(csv);
  if (rows.empty() || rows[0].size() != 1 || rows[0][0] != kReportSchema)
    throw VersionError("report schema mismatch: expected \"" + std::string(kReportSchema) + "\"");
  std::string header;
  if (rows.size() > 1)
    for (std::size_t i = 0; i < rows[1].size(); ++i) header += (i ? "," : "") + rows[1][i];
  if (header != kHeader) throw VersionError("report header does not match schema v1");

  std::vector<RunReport> out;
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const auto& f = rows[i];
    const std::size_t line = i + 1;
    if (f.size() != 16) throw ParseError(line, "expected 16 columns");
    RunReport r;
    r.algorithm = f[0];
    r.troll_type = f[1];
    r.noise_level = parse_double(f[2], line);
    r.seed = parse_uint(f[3], line);
    r.balanced_accuracy = parse_double(f[4], line);
    r.error_rate = parse_double(f[5], line);
    r.troll_precision = parse_double(f[6], line);
    r.troll_precision_empty = parse_flag(f[7], line);
    r.troll_recall = parse_double(f[8], line);
    r.troll_recall_empty = parse_flag(f[9], line);
    r.examples_removed = parse_uint(f[10], line);
    r.examples_flipped = parse_uint(f[11], line);
    r.users_removed = parse_uint(f[12], line);
    r.chosen_hyperparameters = f[13];
    r.wall_time = parse_double(f[14], line);
    r.error = f[15];
    out.push_back(std::move(r));
  }
  return out;
}

void sort_reports(std::vector<RunReport>& reports) {
  // Full rows break key ties, so any input permutation sorts identically.
  std::sort(reports.begin(), reports.end(), [](const RunReport& a, const RunReport& b) {
    if (report_key(a) != report_key(b)) return report_key(a) < report_key(b);
    return render_report_row(a) < render_report_row(b);
  });
}

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd m;
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::vector<AggregateRow> aggregate(const std::vector<RunReport>& input) {
  // Canonical order first so floating-point sums do not depend on input order.
  auto reports = input;
  sort_reports(reports);
  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, std::vector<const RunReport*>> cells;
  for (const auto& r : reports) cells[{r.troll_type, r.algorithm, r.noise_level}].push_back(&r);

  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : cells) {
    AggregateRow row;
    std::tie(row.troll_type, row.algorithm, row.noise_level) = key;
    std::vector<double> bacc, err, prec, rec, removed, flipped, users;
    for (const auto* r : members) {
      ++row.runs;
      if (r->failed()) {
        ++row.failed_runs;
        continue;
      }
      bacc.push_back(r->balanced_accuracy);
      err.push_back(r->error_rate);
      if (!r->troll_precision_empty) prec.push_back(r->troll_precision);
      if (!r->troll_recall_empty) rec.push_back(r->troll_recall);
      removed.push_back(static_cast<double>(r->examples_removed));
      flipped.push_back(static_cast<double>(r->examples_flipped));
      users.push_back(static_cast<double>(r->users_removed));
    }
    row.balanced_accuracy = mean_sd(bacc);
    row.error_rate = mean_sd(err);
    row.troll_precision = mean_sd(prec);
    row.troll_precision_empty = prec.empty();
    row.troll_recall = mean_sd(rec);
    row.troll_recall_empty = rec.empty();
    row.examples_removed = mean_sd(removed);
    row.examples_flipped = mean_sd(flipped);
    row.users_removed = mean_sd(users);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_summary_csv(const std::vector<AggregateRow>& rows) {
  std::string out(kReportSchema);
  out += '\n';
  out += kSummaryHeader;
  out += '\n';
  auto ms = [](const MeanSd& m) { return fixed(m.mean) + ',' + fixed(m.sd); };
  for (const auto& r : rows) {
    out += quote(r.troll_type) + ',' + quote(r.algorithm) + ',' + fixed(r.noise_level) + ',' +
           std::to_string(r.runs) + ',' + std::to_string(r.failed_runs) + ',' +
           ms(r.balanced_accuracy) + ',' + ms(r.error_rate) + ',' + ms(r.troll_precision) + ',' +
           (r.troll_precision_empty ? "1" : "0") + ',' + ms(r.troll_recall) + ',' +
           (r.troll_recall_empty ? "1" : "0") + ',' + ms(r.examples_removed) + ',' +
           ms(r.examples_flipped) + ',' + ms(r.users_removed) + '\n';
  }
  return out;
}

std::string render_summary_table(const std::vector<AggregateRow>& rows) {
  std::map<std::string, int> columns_seen;  // column label -> present
  std::map<std::pair<int, std::string>, std::map<std::string, const AggregateRow*>> grid;
  std::map<std::string, std::set<double>> levels;
  for (const auto& r : rows) levels[r.troll_type].insert(r.noise_level);
  for (const auto& r : rows) {
    std::string col = r.troll_type;
    if (levels[r.troll_type].size() > 1) col += "@" + fixed(r.noise_level, 2);
    columns_seen[col] = 1;
    grid[{algorithm_rank(r.algorithm), r.algorithm}][col] = &r;
  }

  std::ostringstream out;
  out << "| algorithm |";
  for (const auto& [col, _] : columns_seen) out << ' ' << col << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < columns_seen.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& [alg, cells] : grid) {
    out << "| " << alg.second << " |";
    for (const auto& [col, _] : columns_seen) {
      const auto it = cells.find(col);
      if (it == cells.end()) {
        out << " - |";
        continue;
      }
      const auto* r = it->second;
      out << ' ' << fixed(100.0 * r->error_rate.mean, 1) << "% ± " << fixed(100.0 * r->error_rate.sd, 1);
      if (r->failed_runs) out << " (" << r->failed_runs << " failed)";
      out << " |";
    }
    out << '\n';
  }
  return out.str();
}

AggregateOutput aggregate_reports(const std::vector<std::filesystem::path>& paths) {
  AggregateOutput out;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open report " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto runs = parse_reports_csv(buf.str());
    out.runs.insert(out.runs.end(), std::make_move_iterator(runs.begin()),
                    std::make_move_iterator(runs.end()));
  }
  sort_reports(out.runs);
  out.summary = aggregate(out.runs);
  return out;
}

}  // namespace trollkit
