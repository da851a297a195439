#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "bimp/planner.hpp"
#include "bimp/trace.hpp"
#include "oracles.hpp"

using namespace bimp;

namespace {

std::string scenario_text(const std::string& segments, const std::string& speed, const std::string& obstacles,
                          int horizon = 20) {
  return R"({
  "name": "unit",
  "road": {"lane_width": 3.5, "lane_count": 2, "margin": 1.0, "resolution": 1.0, "start": [0.0, 0.0],
           "heading": 0.0, "segments": )" +
         segments + R"(},
  "obstacles": )" + obstacles +
         R"(,
  "ego": {"s": 0.0, "lateral": -1.75, "speed": 10.0, "u": [0.0, 0.0]},
  "vehicle": {"model": "bicycle", "wheelbase": 2.7, "v_min": 0.0, "v_max": 35.0},
  "reference": {"speed": )" +
         speed + R"(, "lateral": -1.75},
  "planner": {"N": 50, "H": )" +
         std::to_string(horizon) + R"(, "dt": 0.1, "seed": 3},
  "termination": {"max_steps": 10, "stop_on_collision": false}
})";
}

ScenarioConfig straight_scenario(const std::string& speed = "10.0", int horizon = 20) {
  return parse_scenario(scenario_text(R"([{"straight": 300.0}])", speed, "[]", horizon));
}

}  // namespace

TEST_CASE("references on a straight road") {
  const ScenarioConfig cfg = straight_scenario();
  const ReferenceHorizon refs = generate_references(cfg, 5.0, 0, 20);
  REQUIRE(refs.r.size() == 21);
  REQUIRE(refs.s.size() == 21);
  for (std::size_t i = 1; i < refs.r.size(); ++i) {
    CHECK(refs.r[i][0] - refs.r[i - 1][0] == doctest::Approx(1.0));
    CHECK(refs.r[i][1] == doctest::Approx(-1.75));
    CHECK(refs.r[i][3] == 10.0);
    CHECK(refs.s[i] == Eigen::Vector2d::Zero());
  }
  CHECK(refs.r[0][0] == doctest::Approx(5.0));
}

TEST_CASE("reference speed follows the schedule down to zero") {
  const ScenarioConfig cfg = straight_scenario("[[0.0, 10.0], [1.0, 0.0]]");
  const ReferenceHorizon refs = generate_references(cfg, 0.0, 5, 10);
  CHECK(refs.r[0][3] == doctest::Approx(5.0));
  CHECK(refs.r[5][3] == doctest::Approx(0.0));
  CHECK(refs.r[10][3] == 0.0);
  CHECK(refs.r[10][0] == doctest::Approx(refs.r[5][0]));
  for (std::size_t i = 1; i < refs.r.size(); ++i) CHECK(refs.r[i][0] >= refs.r[i - 1][0]);
}

TEST_CASE("reference steering on an arc") {
  const ScenarioConfig cfg =
      parse_scenario(scenario_text(R"([{"arc": {"radius": 50.0, "angle": 1.5}}])", "10.0", "[]"));
  const ReferenceHorizon refs = generate_references(cfg, 0.0, 0, 5);
  for (const auto& s : refs.s) {
    CHECK(s[0] == 0.0);
    CHECK(s[1] == doctest::Approx(std::atan(2.7 / 50.0)));
    CHECK(s[1] == doctest::Approx(0.05394).epsilon(1e-4));
  }
  // heading follows the road
  CHECK(refs.r[5][2] == doctest::Approx(refs.r[0][2] + 5.0 / 50.0).epsilon(1e-3));
}

TEST_CASE("ensemble smoother matches linear-quadratic tracking") {
  // scalar state x+ = a x + b u with augmented (x, u, du)
  const double a = 1.0;
  const double b = 0.5;
  const int horizon = 10;
  StateSpaceModel<double> model;
  model.transition = [=](long, const Eigen::VectorXd& s) {
    Eigen::VectorXd next(3);
    next << a * s[0] + b * s[1], s[1], 0.0;
    return next;
  };
  model.observe = [](long, const Eigen::VectorXd& s) { return Eigen::VectorXd(s.head(2)); };
  model.noise_embedding = Eigen::Vector3d(0.0, 1.0, 1.0);
  model.measurement_dim = 2;

  const double big = 1e10;
  SmootherConfig<double> cfg;
  cfg.ensemble_size = 40000;
  cfg.dof_init = big;
  cfg.process_noise = NoiseBlock<double>::diagonal(Eigen::VectorXd::Constant(1, 0.25), big);
  cfg.measurement_noise = {NoiseBlock<double>::diagonal(Eigen::VectorXd::Constant(1, 1.0), big),
                           NoiseBlock<double>::diagonal(Eigen::VectorXd::Constant(1, 4.0), big)};

  const Eigen::Vector3d center(0.0, 0.2, 0.0);
  const StreamKey key(17);
  auto ens = initialize_ensemble<double>(center, model.noise_embedding, cfg.process_noise, cfg.ensemble_size, 0,
                                         big, key.child(0));
  std::vector<Eigen::VectorXd> ys;
  oracle::LqProblem lq;
  lq.A = Eigen::MatrixXd::Constant(1, 1, a);
  lq.B = Eigen::MatrixXd::Constant(1, 1, b);
  lq.x0 = Eigen::VectorXd::Zero(1);
  lq.u_prev = Eigen::VectorXd::Constant(1, 0.2);
  lq.Qx = Eigen::MatrixXd::Constant(1, 1, 1.0);
  lq.Ru = Eigen::MatrixXd::Constant(1, 1, 0.25);
  lq.Sw = Eigen::MatrixXd::Constant(1, 1, 4.0);
  for (int t = 1; t <= horizon; ++t) {
    ys.push_back(Eigen::Vector2d(2.0, 0.0));
    lq.r.push_back(Eigen::VectorXd::Constant(1, 2.0));
    lq.s.push_back(Eigen::VectorXd::Zero(1));
  }
  const auto result = smooth_horizon(std::move(ens), model, ys, cfg, key);
  const double expected = oracle::lq_first_input(lq)[0];
  const double got = result.mean_trajectory(1, 0);
  CHECK(std::abs(expected - 0.2) > 0.1);
  CHECK(std::abs(got - expected) < 0.05 * std::abs(expected));
}

TEST_CASE("plan step shape") {
  for (int horizon : {1, 5}) {
    const ScenarioConfig cfg = straight_scenario("10.0", horizon);
    const PlannerContext ctx = make_context(cfg);
    const Eigen::Vector4d x(0.0, -1.75, 0.0, 10.0);
    const PlanResult plan = plan_step(ctx, x, Eigen::Vector2d::Zero(), 0, 5.0, StreamKey(1).child(0));
    CHECK(plan.plan.rows() == 8);
    CHECK(plan.plan.cols() == horizon + 1);
    CHECK(plan.plan.col(0).head<4>() == x);
    CHECK(plan.diagnostics.size() == static_cast<std::size_t>(horizon));
    CHECK(plan.applied_u == plan.plan.col(0).segment<2>(4));
    CHECK(plan.final_dof == plan.diagnostics.back().dof);
  }
}

TEST_CASE("empty road run stays safe and on the road") {
  const ScenarioConfig cfg = straight_scenario();
  const RunTrace run = run_scenario(cfg, RunOptions{});
  CHECK(run.records.size() == 10);
  CHECK(run.summary.steps == 10);
  CHECK(run.summary.termination == "max_steps");
  CHECK(run.summary.safety_violations == 0);
  CHECK(run.summary.boundary_violations == 0);
  CHECK_FALSE(run.summary.min_ov_distance.has_value());
  CHECK_FALSE(run.summary.collision_step.has_value());
  for (const auto& r : run.records) CHECK(r.wall_ms == 0.0);
}

TEST_CASE("violation flags") {
  ConstraintParams p;
  p.d_min = 1.0;
  const Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  CHECK(violation_flags({5.0, 3.0}, 2.0, zero, zero, p, 1.0) == 0U);
  CHECK(violation_flags({5.0, 0.5}, 2.0, zero, zero, p, 1.0) == kSafetyDistance);
  CHECK(violation_flags({}, 0.5, zero, zero, p, 1.0) == kRoadBoundary);
  CHECK(violation_flags({}, 2.0, Eigen::Vector2d(p.u_max[0] + 0.1, 0.0), zero, p, 1.0) == kInputBounds);
  CHECK(violation_flags({}, 2.0, zero, Eigen::Vector2d(0.0, p.du_min[1] - 0.01), p, 1.0) == kRateBounds);
  CHECK(violation_flags({-1.0}, -3.0, Eigen::Vector2d(p.u_min[0] - 1.0, 0.0), Eigen::Vector2d(9.0, 0.0), p,
                        1.0) == 15U);
  // the bounds themselves are feasible
  CHECK(violation_flags({}, 1.0, p.u_max, p.du_min, p, 1.0) == 0U);
}

TEST_CASE("run summary") {
  std::vector<StepRecord> records(4);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].step = static_cast<long>(i);
    records[i].ov_distances = {10.0 - static_cast<double>(i)};
    records[i].boundary_margin = 2.0;
    records[i].lateral_error = 1.0;
    records[i].speed_error = i % 2 == 0 ? 2.0 : -2.0;
    records[i].wall_ms = 1.5;
  }
  records[2].flags = kSafetyDistance | kRateBounds;
  records[3].flags = kSafetyDistance;
  records[3].ov_distances = {-0.5};
  records[1].boundary_margin = 0.25;
  records[1].extrapolated = true;

  const RunSummary s = summarize(records, "max_steps");
  CHECK(s.steps == 4);
  CHECK(s.safety_violations == 2);
  CHECK(s.rate_violations == 1);
  CHECK(s.total_violations() == 3);
  REQUIRE(s.min_ov_distance.has_value());
  CHECK(*s.min_ov_distance == -0.5);
  CHECK(s.min_boundary_margin == 0.25);
  REQUIRE(s.first_safety_violation_step.has_value());
  CHECK(*s.first_safety_violation_step == 2);
  REQUIRE(s.collision_step.has_value());
  CHECK(*s.collision_step == 3);
  CHECK(s.lateral_rmse == doctest::Approx(1.0));
  CHECK(s.speed_rmse == doctest::Approx(2.0));
  CHECK(s.wall_ms_total == doctest::Approx(6.0));
  CHECK(s.extrapolated_steps == 1);
}

TEST_CASE("comparing runs") {
  const ScenarioConfig cfg = straight_scenario();
  const auto base = std::filesystem::temp_directory_path() / "bimp_compare";
  std::filesystem::remove_all(base);
  const std::string a = (base / "a").string();
  const std::string b = (base / "b").string();
  write_run(a, run_scenario(cfg, RunOptions{}), cfg);
  RunOptions shorter;
  shorter.max_steps = 6;
  write_run(b, run_scenario(cfg, shorter), cfg);

  const auto same = nlohmann::json::parse(compare_runs(a, a));
  for (const auto& [column, delta] : same.at("max_abs_delta").items()) CHECK(delta.get<double>() == 0.0);
  CHECK_FALSE(same.at("truncated").get<bool>());
  CHECK(same.at("losing_run").is_null());

  const auto cut = nlohmann::json::parse(compare_runs(a, b));
  CHECK(cut.at("truncated").get<bool>());
  CHECK(cut.at("aligned_steps").get<int>() == 6);
  CHECK(cut.contains("note"));
  // the shorter run is a prefix of the longer one
  CHECK(cut.at("max_abs_delta").at("x").get<double>() == 0.0);
  CHECK(read_trace_csv(a + "/trace.csv").rows.size() == 10);
  CHECK(read_trace_csv(b + "/trace.csv").rows.size() == 6);
  std::filesystem::remove_all(base);
}
