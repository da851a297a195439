// plan run      --scenario <file> --out <dir> [--seed S] [--mode enkts|enks]
// plan compare  <dirA> <dirB> --out report.json
// plan check    [--suite name]
//
// Exit codes: 0 success, 1 error, 2 collision with stop_on_collision set.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <exception>
#include <fstream>

#include "bimp/parallel.hpp"
#include "bimp/planner.hpp"
#include "bimp/scenario.hpp"
#include "bimp/trace.hpp"
#include "bimp_checks.hpp"

namespace {

int run(const std::string& scenario_path, const std::string& out, const std::optional<std::uint64_t>& seed,
        const std::string& mode, std::optional<long> max_steps, bool timing, bool plans) {
  const bimp::ScenarioConfig config = bimp::load_scenario(scenario_path);
  bimp::RunOptions options;
  options.seed = seed;
  if (!mode.empty()) options.mode = bimp::parse_planner_mode(mode);
  options.max_steps = max_steps;
  options.threads = bimp::threads_from_environment();
  options.timing = timing;
  options.keep_plans = plans;
  const bimp::RunTrace trace = bimp::run_scenario(config, options);
  bimp::write_run(out, trace, bimp::apply_options(config, options));
  const auto& s = trace.summary;
  fmt::print("{} [{}] seed {}: {} steps, min OV distance {}, violations {} (safety {}, boundary {}, input {}, rate {})\n",
             trace.scenario, bimp::to_string(trace.mode), trace.seed, s.steps,
             s.min_ov_distance ? fmt::format("{:.3f} m", *s.min_ov_distance) : std::string("n/a"),
             s.total_violations(), s.safety_violations, s.boundary_violations, s.input_violations,
             s.rate_violations);
  if (s.termination == "collision") {
    fmt::print("collision at step {}; run stopped\n", *s.collision_step);
    return 2;
  }
  return 0;
}

int compare(const std::string& a, const std::string& b, const std::string& out) {
  const std::string report = bimp::compare_runs(a, b);
  if (out.empty() || out == "-") {
    fmt::print("{}", report);
  } else {
    std::ofstream file(out, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + out);
    file << report;
  }
  return 0;
}

int check(const std::string& suite, const std::string& scenario_dir) {
  bimp::checks::CheckOptions options;
  if (!scenario_dir.empty()) options.scenario_dir = scenario_dir;
  std::vector<std::string> suites;
  if (suite.empty() || suite == "all") {
    suites = bimp::checks::suite_names();
  } else {
    suites = {suite};
  }
  bool ok = true;
  for (const auto& name : suites) {
    for (const auto& r : bimp::checks::run_suite(name, options)) {
      fmt::print("{:<5} {:<12} {:<34} {:>8.2f}s  {}\n", r.passed ? "PASS" : "FAIL", r.suite, r.name, r.seconds,
                 r.detail);
      ok = ok && r.passed;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Student's-t ensemble smoother motion planner"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a scenario and write trace.csv and summary.json");
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<long> max_steps;
  bool timing = false;
  bool plans = false;
  run_cmd->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--seed", seed, "override the scenario seed");
  run_cmd->add_option("--mode", mode, "override the planner mode")->check(CLI::IsMember({"enkts", "enks"}));
  run_cmd->add_option("--max-steps", max_steps, "override the step limit")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--timing", timing, "record per-step wall time (trace is then not reproducible)");
  run_cmd->add_flag("--plans", plans, "also write plan_k<k>.csv for every step");

  auto* cmp_cmd = app.add_subcommand("compare", "compare two run directories");
  std::string dir_a;
  std::string dir_b;
  std::string report;
  cmp_cmd->add_option("dirA", dir_a, "first run")->required()->check(CLI::ExistingDirectory);
  cmp_cmd->add_option("dirB", dir_b, "second run")->required()->check(CLI::ExistingDirectory);
  cmp_cmd->add_option("--out", report, "report file (default: stdout)");

  auto* check_cmd = app.add_subcommand("check", "run the built-in oracle suites");
  std::string suite;
  std::string scenario_dir;
  check_cmd->add_option("--suite", suite, "suite to run (default: all)")
      ->check(CLI::IsMember([] {
        auto names = bimp::checks::suite_names();
        names.emplace_back("all");
        return names;
      }()));
  check_cmd->add_option("--scenarios", scenario_dir, "directory holding the shipped scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return run(scenario, out_dir, seed, mode, max_steps, timing, plans);
    if (cmp_cmd->parsed()) return compare(dir_a, dir_b, report);
    if (check_cmd->parsed()) return check(suite, scenario_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "plan: %s\n", e.what());
    return 1;
  }
  return 1;
}
