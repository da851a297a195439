#include "bimp/trace.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "bimp/errors.hpp"

namespace bimp {

using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << content;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_step(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

std::vector<std::string> trace_columns(std::size_t obstacles) {
  std::vector<std::string> cols{"step", "t", "x", "y", "theta", "v", "a", "steer", "da", "dsteer"};
  for (std::size_t i = 0; i < obstacles; ++i) cols.push_back("dist_ov" + std::to_string(i + 1));
  for (const char* c : {"boundary_margin", "viol_flags", "delta", "nu", "wall_ms"}) cols.emplace_back(c);
  return cols;
}

std::string trace_csv(const RunTrace& trace) {
  const std::size_t n_ov = trace.records.empty() ? 0 : trace.records.front().ov_distances.size();
  const auto cols = trace_columns(n_ov);
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += cols[i];
    out += i + 1 < cols.size() ? ',' : '\n';
  }
  for (const auto& r : trace.records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}", r.step, r.t, r.x[0], r.x[1], r.x[2], r.x[3], r.u[0], r.u[1],
                       r.du[0], r.du[1]);
    for (double d : r.ov_distances) out += fmt::format(",{}", d);
    out += fmt::format(",{},{},{},{},{}\n", r.boundary_margin, r.flags, r.delta, r.nu, r.wall_ms);
  }
  return out;
}

std::string summary_json(const RunTrace& trace, const ScenarioConfig& config) {
  const RunSummary& s = trace.summary;
  const ConstraintParams& c = config.constraints;
  json j;
  j["scenario"] = trace.scenario;
  j["mode"] = to_string(trace.mode);
  j["seed"] = trace.seed;
  j["steps"] = s.steps;
  j["termination"] = s.termination;
  j["ensemble_size"] = config.planner.ensemble_size;
  j["horizon"] = config.planner.horizon;
  j["dt"] = config.planner.dt;
  j["obstacles"] = config.obstacles.size();
  j["vehicle_model"] = config.vehicle.model == VehicleModel::kMlp ? "mlp" : "bicycle";
  j["plant_model"] = config.plant == PlantModel::kSame ? "same" : "bicycle";
  j["bounds"] = {{"d_min", c.d_min},   {"road_margin", config.road.margin()},
                 {"u_min", vec(c.u_min)}, {"u_max", vec(c.u_max)},
                 {"du_min", vec(c.du_min)}, {"du_max", vec(c.du_max)}};
  j["min_ov_distance"] = optional_number(s.min_ov_distance);
  j["min_boundary_margin"] = s.min_boundary_margin;
  j["violations"] = {{"safety_distance", s.safety_violations},
                     {"boundary", s.boundary_violations},
                     {"input", s.input_violations},
                     {"rate", s.rate_violations},
                     {"total", s.total_violations()}};
  j["collision_step"] = optional_step(s.collision_step);
  j["first_safety_violation_step"] = optional_step(s.first_safety_violation_step);
  j["tracking_rmse"] = {{"lateral", s.lateral_rmse}, {"speed", s.speed_rmse}};
  j["wall_ms_total"] = s.wall_ms_total;
  j["extrapolated_steps"] = s.extrapolated_steps;
  return j.dump(2) + "\n";
}

std::string plan_csv(const Eigen::MatrixXd& plan, long step, double dt) {
  std::string out = "t,x,y,theta,v,a,steer,da,dsteer\n";
  for (Eigen::Index c = 0; c < plan.cols(); ++c) {
    out += fmt::format("{}", static_cast<double>(step + c) * dt);
    for (Eigen::Index r = 0; r < plan.rows(); ++r) out += fmt::format(",{}", plan(r, c));
    out += '\n';
  }
  return out;
}

void write_run(const std::string& dir, const RunTrace& trace, const ScenarioConfig& config) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  write_file(root / "trace.csv", trace_csv(trace));
  write_file(root / "summary.json", summary_json(trace, config));
  for (std::size_t k = 0; k < trace.plans.size(); ++k) {
    write_file(root / fmt::format("plan_k{}.csv", k),
               plan_csv(trace.plans[k], static_cast<long>(k), config.planner.dt));
  }
}

std::size_t TraceTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw FormatError("trace has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

TraceTable parse_trace_csv(const std::string& text) {
  TraceTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw FormatError("trace: missing header");
  {
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError(fmt::format("trace line {}: '{}' is not a number", line_no, cell));
      }
    }
    if (row.size() != table.columns.size()) {
      throw FormatError(fmt::format("trace line {}: expected {} fields, found {}", line_no, table.columns.size(),
                                    row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

TraceTable read_trace_csv(const std::string& path) {
  try {
    return parse_trace_csv(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string compare_runs(const std::string& dir_a, const std::string& dir_b) {
  const std::filesystem::path a(dir_a);
  const std::filesystem::path b(dir_b);
  const json sa = json::parse(read_file((a / "summary.json").string()));
  const json sb = json::parse(read_file((b / "summary.json").string()));
  if (sa.at("scenario") != sb.at("scenario")) {
    throw FormatError("compare: runs come from different scenarios (" + sa.at("scenario").get<std::string>() +
                      " vs " + sb.at("scenario").get<std::string>() + ")");
  }
  const TraceTable ta = read_trace_csv((a / "trace.csv").string());
  const TraceTable tb = read_trace_csv((b / "trace.csv").string());
  if (ta.columns != tb.columns) throw FormatError("compare: trace columns differ");

  const std::size_t aligned = std::min(ta.rows.size(), tb.rows.size());
  json deltas = json::object();
  for (std::size_t c = 0; c < ta.columns.size(); ++c) {
    double max_abs = 0.0;
    for (std::size_t r = 0; r < aligned; ++r) max_abs = std::max(max_abs, std::abs(ta.rows[r][c] - tb.rows[r][c]));
    deltas[ta.columns[c]] = max_abs;
  }

  auto table_row = [](const json& s) {
    return json{{"mode", s.at("mode")},
                {"seed", s.at("seed")},
                {"steps", s.at("steps")},
                {"violations", s.at("violations")},
                {"min_ov_distance", s.at("min_ov_distance")},
                {"min_boundary_margin", s.at("min_boundary_margin")},
                {"tracking_rmse", s.at("tracking_rmse")},
                {"wall_ms_total", s.at("wall_ms_total")},
                {"collision_step", s.at("collision_step")}};
  };

  json report;
  report["scenario"] = sa.at("scenario");
  report["run_a"] = a.string();
  report["run_b"] = b.string();
  report["steps_a"] = ta.rows.size();
  report["steps_b"] = tb.rows.size();
  report["aligned_steps"] = aligned;
  report["truncated"] = ta.rows.size() != tb.rows.size();
  if (ta.rows.size() != tb.rows.size()) {
    report["note"] = fmt::format("runs differ in length ({} vs {}); compared on the first {} steps", ta.rows.size(),
                                 tb.rows.size(), aligned);
  }
  report["max_abs_delta"] = deltas;
  report["summary"] = {{"a", table_row(sa)}, {"b", table_row(sb)}};

  // A run loses when it collides; with both colliding the earlier collision loses.
  const json& ca = sa.at("collision_step");
  const json& cb = sb.at("collision_step");
  json losing = nullptr;
  if (!ca.is_null() && (cb.is_null() || ca.get<long>() <= cb.get<long>())) {
    losing = {{"run", "a"}, {"collision_step", ca}};
  } else if (!cb.is_null()) {
    losing = {{"run", "b"}, {"collision_step", cb}};
  }
  report["losing_run"] = losing;
  return report.dump(2) + "\n";
}

}  // namespace bimp
