// Run outputs: trace.csv, summary.json, plan_k<k>.csv, and the comparison
// report of two run directories.
//
// trace.csv columns, in order:
//   step, t, x, y, theta, v, a, steer, da, dsteer, dist_ov1..dist_ovN,
//   boundary_margin, viol_flags, delta, nu, wall_ms
// viol_flags is the sum of 1 (safety distance), 2 (road boundary),
// 4 (input bounds), 8 (input-rate bounds).
#pragma once

#include <map>
#include <string>
#include <vector>

#include "bimp/planner.hpp"

namespace bimp {

std::vector<std::string> trace_columns(std::size_t obstacles);

std::string trace_csv(const RunTrace& trace);
/// Summary object; constraint bounds are included for plotting.
std::string summary_json(const RunTrace& trace, const ScenarioConfig& config);
/// Columns t, x, y, theta, v, a, steer, da, dsteer; one row per plan time.
std::string plan_csv(const Eigen::MatrixXd& plan, long step, double dt);

/// Writes trace.csv, summary.json and, when present, plan_k<k>.csv files.
void write_run(const std::string& dir, const RunTrace& trace, const ScenarioConfig& config);

/// Parsed numeric CSV with a header row.
struct TraceTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const;
};

TraceTable parse_trace_csv(const std::string& text);
TraceTable read_trace_csv(const std::string& path);

/// Aligns two runs of the same scenario on their common prefix. The
/// report holds per-column maximum absolute deltas, both summaries side by
/// side and the collision step of each run. Throws FormatError when the
/// runs come from different scenarios.
std::string compare_runs(const std::string& dir_a, const std::string& dir_b);

}  // namespace bimp
