#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>

#include "bimp/ensemble_smoother.hpp"
#include "bimp/nmpc_bridge.hpp"
#include "bimp/planner.hpp"
#include "bimp/scenario.hpp"
#include "bimp/student_t.hpp"
#include "bimp/trace.hpp"
#include "bimp/virtual_system.hpp"
#include "bimp_checks.hpp"
#include "oracles.hpp"

namespace bimp::checks {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kGaussianDof = 1e12;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative(const Eigen::MatrixXd& value, const Eigen::MatrixXd& reference) {
  return (value - reference).norm() / std::max(reference.norm(), 1e-300);
}

Eigen::MatrixXd random_spd(Eigen::Index n, RandomEngine& engine) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(engine);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd random_vector(Eigen::Index n, RandomEngine& engine) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(engine);
  return v;
}

CheckResult make_result(bool passed, std::string detail) {
  CheckResult r;
  r.passed = passed;
  r.detail = std::move(detail);
  return r;
}

std::string scenario_path(const CheckOptions& options, const char* name) {
  return options.scenario_dir + "/" + name + ".json";
}

// tdist

CheckResult gaussian_conditional(const CheckOptions&) {
  const auto start = Clock::now();
  RandomEngine engine(StreamKey(101).value());
  double worst_mean = 0.0;
  double worst_cov = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd scale = random_spd(6, engine);
    const Eigen::VectorXd location = random_vector(6, engine);
    const Eigen::VectorXd b = location.tail(2) + random_vector(2, engine);
    const StudentT<double> joint(location, scale, kGaussianDof);
    const auto update = conditional_update(JointPartition<double>(joint, 4, 2), b);
    const auto exact = oracle::gaussian_conditional(location, joint.covariance(), 4, b);
    worst_mean = std::max(worst_mean, relative(update.posterior.location(), exact.mean));
    worst_cov = std::max(worst_cov, relative(update.posterior.covariance(), exact.cov));
  }
  const double elapsed = seconds_since(start);
  return make_result(worst_mean <= 1e-6 && worst_cov <= 1e-6 && elapsed < 5.0,
                     fmt::format("max rel error mean {:.2e}, cov {:.2e} over 100 joints (tol 1e-6, < 5 s)",
                                 worst_mean, worst_cov));
}

CheckResult t_conditional_quadrature(const CheckOptions&) {
  const auto start = Clock::now();
  const double nu = 5.0;
  const Eigen::Vector2d location(0.3, -0.2);
  Eigen::Matrix2d scale;
  scale << 1.2, 0.5, 0.5, 0.8;
  double worst = 0.0;
  std::string detail;
  for (double b : {-1.0, 0.4, 2.5}) {
    const StudentT<double> joint(location, scale, nu);
    const auto update = conditional_update(JointPartition<double>(joint, 1, 1), Eigen::VectorXd::Constant(1, b));
    const auto q = oracle::t_conditional_quadrature(location, scale, nu, b);
    // The conditional has nu + 1 degrees of freedom, so its scale is var * (nu' - 2) / nu'.
    const double nu_post = nu + 1.0;
    const double q_scale = q.variance * (nu_post - 2.0) / nu_post;
    const double e_mean = std::abs(update.posterior.location()[0] - q.mean) / std::abs(q.mean);
    const double e_scale = std::abs(update.posterior.scale()(0, 0) - q_scale) / q_scale;
    worst = std::max({worst, e_mean, e_scale});
    detail += fmt::format("b={}: mean {:.3e} scale {:.3e}; ", b, e_mean, e_scale);
  }
  const double elapsed = seconds_since(start);
  return make_result(worst <= 0.02 && elapsed < 60.0, detail + "tol 2%, < 60 s");
}

CheckResult sampling_covariance(const CheckOptions&) {
  auto engine = StreamKey(202).engine();
  const StudentT<double> dist(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 5.0);
  const Eigen::MatrixXd draws = sample_mvt(dist, 1000000, engine);
  const Eigen::VectorXd mean = draws.rowwise().mean();
  const Eigen::MatrixXd dev = draws.colwise() - mean;
  const Eigen::MatrixXd cov = dev * dev.transpose() / static_cast<double>(draws.cols() - 1);
  const Eigen::MatrixXd expected = (5.0 / 3.0) * Eigen::MatrixXd::Identity(2, 2);
  const double err = relative(cov, expected);
  return make_result(err <= 0.03, fmt::format("relative Frobenius error {:.4f} (tol 0.03)", err));
}

CheckResult gaussian_limit_ks(const CheckOptions&) {
  auto engine = StreamKey(303).engine();
  const StudentT<double> dist(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 1e9);
  const Eigen::MatrixXd draws = sample_mvt(dist, 100000, engine);
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  const auto n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = oracle::normal_cdf(v[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return make_result(ks < 0.01, fmt::format("KS distance {:.4f} (tol 0.01)", ks));
}

CheckResult log_pdf_gaussian_limit(const CheckOptions&) {
  RandomEngine engine(StreamKey(404).value());
  const Eigen::MatrixXd scale = random_spd(3, engine);
  const Eigen::VectorXd location = random_vector(3, engine);
  const StudentT<double> dist(location, scale, kGaussianDof);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd p = location + random_vector(3, engine);
    worst = std::max(worst, std::abs(log_pdf(dist, p) - oracle::gaussian_log_pdf(location, scale, p)));
  }
  return make_result(worst <= 1e-5, fmt::format("max abs error {:.2e} at 10 points (tol 1e-5)", worst));
}

// smoother

struct LinearSetup {
  oracle::LinearGaussianModel model;
  StateSpaceModel<double> system;
  SmootherConfig<double> config;
};

LinearSetup linear_setup(Eigen::Index ensemble_size) {
  LinearSetup s;
  auto& m = s.model;
  m.A.resize(2, 2);
  m.A << 1.0, 0.1, 0.0, 1.0;
  m.Q = Eigen::Vector2d(0.01, 0.04).asDiagonal();
  m.H.resize(1, 2);
  m.H << 1.0, 0.0;
  m.R = Eigen::MatrixXd::Constant(1, 1, 0.25);
  m.m0 = Eigen::Vector2d(0.0, 1.0);
  m.P0 = Eigen::Vector2d(1.0, 0.5).asDiagonal();

  s.system.transition = [A = m.A](long, const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x); };
  s.system.observe = [H = m.H](long, const Eigen::VectorXd& x) { return Eigen::VectorXd(H * x); };
  s.system.noise_embedding = Eigen::MatrixXd::Identity(2, 2);
  s.system.measurement_dim = 1;

  s.config.ensemble_size = ensemble_size;
  s.config.dof_init = kGaussianDof;
  s.config.dof_growth = DofGrowth::kAccumulate;
  s.config.process_noise = {Eigen::MatrixXd(m.Q.llt().matrixL()), kGaussianDof};
  s.config.measurement_noise = {{Eigen::MatrixXd(m.R.llt().matrixL()), kGaussianDof}};
  return s;
}

CheckResult kalman_rts(const CheckOptions&) {
  const auto start = Clock::now();
  const LinearSetup setup = linear_setup(5000);
  const auto& m = setup.model;
  const int horizon = 10;
  const int seeds = 20;
  double total = 0.0;
  double worst = 0.0;
  for (int seed = 1; seed <= seeds; ++seed) {
    const StreamKey key(static_cast<std::uint64_t>(seed));
    // Synthetic truth and data from a stream the smoother never touches.
    auto truth_engine = key.child(999).engine();
    std::normal_distribution<double> normal;
    Eigen::VectorXd x = m.m0 + Eigen::MatrixXd(m.P0.llt().matrixL()) * Eigen::Vector2d(normal(truth_engine), normal(truth_engine));
    std::vector<Eigen::VectorXd> ys;
    for (int t = 1; t <= horizon; ++t) {
      x = m.A * x + Eigen::MatrixXd(m.Q.llt().matrixL()) * Eigen::Vector2d(normal(truth_engine), normal(truth_engine));
      ys.push_back(m.H * x + Eigen::VectorXd::Constant(1, std::sqrt(m.R(0, 0)) * normal(truth_engine)));
    }
    const auto kf = oracle::kalman_rts(m, ys);

    const NoiseBlock<double> prior{Eigen::MatrixXd(m.P0.llt().matrixL()), kGaussianDof};
    auto ens = initialize_ensemble<double>(m.m0, Eigen::MatrixXd::Identity(2, 2), prior, setup.config.ensemble_size,
                                           0, kGaussianDof, key.child(0));
    const auto result = smooth_horizon(std::move(ens), setup.system, ys, setup.config, key);
    const Eigen::VectorXd terminal = result.mean_trajectory.col(horizon);
    const Eigen::VectorXd& exact = kf.smoothed_mean.back();
    const Eigen::VectorXd sd = kf.smoothed_cov.back().diagonal().cwiseSqrt();
    const double err = ((terminal - exact).array() / sd.array()).abs().maxCoeff();
    total += err;
    worst = std::max(worst, err);
  }
  const double mean_err = total / seeds;
  const double elapsed = seconds_since(start);
  return make_result(mean_err <= 0.05 && elapsed < 60.0,
                     fmt::format("terminal mean error {:.4f} posterior sd averaged over {} seeds (worst {:.4f}; "
                                 "tol 0.05, < 60 s)",
                                 mean_err, seeds, worst));
}

CheckResult enks_reduction(const CheckOptions&) {
  // Vehicle virtual system on a straight road with one distant obstacle
  // and loose bounds, so the barrier channel stays at zero.
  auto env = std::make_shared<Environment>(Environment{
      RoadGeometry::from_segments(Eigen::Vector2d::Zero(), 0.0, {StraightSegment{600.0}}, 3.5, 2, 0.5, 1.0),
      {},
      ConstraintParams{},
      0.1});
  env->params.u_min = Eigen::Vector2d(-100.0, -100.0);
  env->params.u_max = Eigen::Vector2d(100.0, 100.0);
  env->params.du_min = Eigen::Vector2d(-100.0, -100.0);
  env->params.du_max = Eigen::Vector2d(100.0, 100.0);
  env->params.ego = {4.5, 1.8};
  ObstacleScript ov;
  ov.name = "far";
  ov.footprint = {4.5, 1.8};
  ov.waypoints = {{0.0, 300.0, 0.0, 0.0, 10.0}, {10.0, 400.0, 0.0, 0.0, 10.0}};
  env->obstacles.push_back(ov);
  const StateSpaceModel<double> model = make_virtual_model(bicycle_dynamics({}), env);

  SmootherConfig<double> cfg;
  cfg.ensemble_size = 50;
  cfg.dof_init = kGaussianDof;
  cfg.dof_growth = DofGrowth::kAccumulate;
  cfg.process_noise = NoiseBlock<double>::diagonal(Eigen::Vector2d(0.25, 4e-4), kGaussianDof);
  cfg.measurement_noise = {NoiseBlock<double>::diagonal(Eigen::Vector4d(1.0, 1.0, 0.04, 1.0), kGaussianDof),
                           NoiseBlock<double>::diagonal(Eigen::Vector2d(4.0, 0.04), kGaussianDof),
                           NoiseBlock<double>::diagonal(Eigen::VectorXd::Ones(10), kGaussianDof)};

  const int steps = 20;
  std::vector<Eigen::VectorXd> observations;
  for (int t = 1; t <= steps; ++t) {
    VirtualMeasurement y;
    y.r = Eigen::Vector4d(1.0 * t, 0.0, 0.0, 10.0);
    y.s = Eigen::Vector2d::Zero();
    y.z = Eigen::VectorXd::Zero(10);
    observations.push_back(y.pack());
  }
  const StreamKey key(77);
  const AugmentedState center{Eigen::Vector4d(0.0, 0.0, 0.0, 10.0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  const auto initial = initialize_ensemble<double>(center.pack(), model.noise_embedding, cfg.process_noise,
                                                   cfg.ensemble_size, 0, kGaussianDof, key.child(0));

  const auto plain = oracle::plain_enks(initial.samples(), 0, model, cfg.process_noise, cfg.measurement_noise,
                                        observations, key);
  auto ens = initial;
  double worst = 0.0;
  double barrier_peak = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const StreamKey step_key = key.child(static_cast<std::uint64_t>(t));
    ens = predict(std::move(ens), model, cfg.process_noise, step_key);
    const auto meas = measurement_ensemble(ens, model, cfg, step_key);
    barrier_peak = std::max(barrier_peak, meas.noiseless.bottomRows(10).cwiseAbs().maxCoeff());
    ens = update(std::move(ens), observations[static_cast<std::size_t>(t - 1)], meas, cfg, step_key).ensemble;
    worst = std::max(worst, relative(ens.samples(), plain[static_cast<std::size_t>(t - 1)]));
  }
  const auto smoothed = smooth_horizon(initial, model, observations, cfg, key);
  const Eigen::VectorXd plain_mean = plain.back().rowwise().mean();
  const Eigen::MatrixXd plain_traj = Eigen::Map<const Eigen::MatrixXd>(plain_mean.data(), kAugmentedDim, steps + 1);
  const double mean_err = relative(smoothed.mean_trajectory, plain_traj);
  return make_result(worst <= 1e-6 && mean_err <= 1e-6 && barrier_peak == 0.0,
                     fmt::format("max per-step rel difference {:.2e}, smoothed mean {:.2e} over {} steps (tol 1e-6)",
                                 worst, mean_err, steps));
}

// nmpc

struct ToySystem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> f;
  References refs;
  CandidateRequirements req;
  Eigen::VectorXd x0, u_prev;
};

ToySystem toy_system(int horizon) {
  ToySystem s;
  const double dt = 0.1;
  s.f = [dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::VectorXd n(2);
    n << x[0] + dt * x[1] + 0.5 * dt * dt * u[0], x[1] + dt * u[0];
    return n;
  };
  s.refs.r.resize(2, horizon + 1);
  s.refs.s = Eigen::MatrixXd::Zero(1, horizon + 1);
  for (int t = 0; t <= horizon; ++t) s.refs.r.col(t) = Eigen::Vector2d(2.0 * dt * t, 2.0);
  s.req.dynamics = s.f;
  s.req.constraints = [](const Eigen::VectorXd&, const Eigen::VectorXd& u, const Eigen::VectorXd&, long) {
    return Eigen::Vector2d(u[0] - 5.0, -5.0 - u[0]).eval();
  };
  s.x0 = Eigen::Vector2d(0.0, 1.0);
  s.u_prev = Eigen::VectorXd::Zero(1);
  return s;
}

std::vector<CandidateTrajectory> random_candidates(const ToySystem& sys, int count, int horizon, std::uint64_t seed) {
  auto engine = StreamKey(seed).engine();
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);
  std::vector<CandidateTrajectory> out;
  for (int i = 0; i < count; ++i) {
    Eigen::MatrixXd u(1, horizon + 1);
    for (int t = 0; t <= horizon; ++t) u(0, t) = uniform(engine);
    out.push_back(rollout_candidate(sys.x0, sys.u_prev, u, sys.f));
  }
  return out;
}

TrackingNoise toy_noise(double nu) {
  TrackingNoise n;
  n.sigma_x = Eigen::Vector2d(1.0, 0.25).asDiagonal();
  n.sigma_u = Eigen::MatrixXd::Constant(1, 1, 0.5);
  n.sigma_w = Eigen::MatrixXd::Constant(1, 1, 0.1);
  n.nu_x = n.nu_u = n.nu_du = nu;
  return n;
}

CheckResult argmax_equivalence(const CheckOptions&) {
  const auto start = Clock::now();
  const int horizon = 10;
  const ToySystem sys = toy_system(horizon);
  const auto candidates = random_candidates(sys, 100, horizon, 505);
  const auto report = argmax_equivalence_check(candidates, sys.refs, toy_noise(kGaussianDof), sys.req);
  const auto heavy = argmax_equivalence_check(candidates, sys.refs, toy_noise(5.0), sys.req);
  const double elapsed = seconds_since(start);
  return make_result(report.discordant.empty() && report.identical() && elapsed < 10.0,
                     fmt::format("{} discordant pairs of 4950 at nu=1e12 (nu=5 for reference: {}); < 10 s",
                                 report.discordant.size(), heavy.discordant.size()));
}

CheckResult log_posterior_gaussian_limit(const CheckOptions&) {
  const int horizon = 10;
  const ToySystem sys = toy_system(horizon);
  const auto candidates = random_candidates(sys, 20, horizon, 606);
  const TrackingNoise noise = toy_noise(kGaussianDof);
  double worst = 0.0;
  for (const auto& c : candidates) {
    worst = std::max(worst, std::abs(log_posterior(c, sys.refs, noise) + 0.5 * nmpc_cost(c, sys.refs, noise)));
  }
  return make_result(worst <= 1e-5, fmt::format("max |log posterior + J/2| = {:.2e} (tol 1e-5)", worst));
}

// scenario

CheckResult scenario_parameters(const CheckOptions& options) {
  std::string detail;
  bool ok = true;
  for (const char* name : {"emergency_brake", "overtaking"}) {
    const ScenarioConfig c = load_scenario(scenario_path(options, name));
    const bool match = c.planner.ensemble_size == 50 && c.planner.horizon == 20 && c.planner.dt == 0.1;
    ok = ok && match;
    detail += fmt::format("{}: N={} H={} dt={}; ", name, c.planner.ensemble_size, c.planner.horizon, c.planner.dt);
  }
  const ScenarioConfig config = load_scenario(scenario_path(options, "emergency_brake"));
  RunOptions run;
  run.max_steps = 100;
  run.keep_plans = true;
  const auto start = Clock::now();
  const RunTrace trace = run_scenario(config, run);
  const double elapsed = seconds_since(start);
  bool consistent = trace.records.size() == 100 && trace.plans.size() == 100;
  for (std::size_t k = 0; consistent && k < trace.plans.size(); ++k) {
    consistent = trace.plans[k].cols() == config.planner.horizon + 1 &&
                 trace.plans[k].col(0).head<4>() == trace.records[k].x;
  }
  ok = ok && consistent && elapsed < 120.0;
  detail += fmt::format("100-step emergency brake in {:.1f} s (< 120 s), plans {}", elapsed,
                        consistent ? "consistent" : "INCONSISTENT");
  return make_result(ok, detail);
}

CheckResult emergency_brake_safety(const CheckOptions& options) {
  const ScenarioConfig config = load_scenario(scenario_path(options, "emergency_brake"));
  const double d_min = config.constraints.d_min;
  int safe = 0;
  int ordered = 0;
  std::string per_seed;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    RunOptions run;
    run.seed = static_cast<std::uint64_t>(seed);
    run.mode = PlannerMode::kEnKTS;
    const RunSummary t = run_scenario(config, run).summary;
    run.mode = PlannerMode::kEnKS;
    const RunSummary s = run_scenario(config, run).summary;
    const bool is_safe = t.min_ov_distance && *t.min_ov_distance >= d_min;
    safe += is_safe ? 1 : 0;
    ordered += t.total_violations() <= s.total_violations() ? 1 : 0;
    per_seed += fmt::format(" {}:{:.2f}/{}v|{:.2f}/{}v", seed, t.min_ov_distance.value_or(NAN), t.total_violations(),
                            s.min_ov_distance.value_or(NAN), s.total_violations());
  }
  return make_result(safe >= 9 && ordered == seeds,
                     fmt::format("EnKTS safe in {}/{} (need 9), violations <= EnKS on {}/{} seeds; "
                                 "seed:enkts min dist/violations|enks ...{}",
                                 safe, seeds, ordered, seeds, per_seed));
}

CheckResult trace_audit(const CheckOptions& options) {
  long rows = 0;
  long mismatches = 0;
  for (const char* name : {"overtaking", "emergency_brake"}) {
    const ScenarioConfig config = load_scenario(scenario_path(options, name));
    RunOptions run;
    run.max_steps = 60;
    const RunTrace trace = run_scenario(config, run);
    const auto audit = oracle::audit_trace(config, parse_trace_csv(trace_csv(trace)));
    rows += audit.rows;
    mismatches += audit.flag_mismatches + audit.distance_mismatches + audit.margin_mismatches;
  }
  return make_result(mismatches == 0 && rows > 0,
                     fmt::format("{} rows re-checked, {} disagreements with the logged flags and distances", rows,
                                 mismatches));
}

// determinism

CheckResult thread_invariance(const CheckOptions& options) {
  const ScenarioConfig config = load_scenario(scenario_path(options, "emergency_brake"));
  RunOptions run;
  run.threads = 1;
  const std::string a = trace_csv(run_scenario(config, run));
  const std::string b = trace_csv(run_scenario(config, run));
  run.threads = 8;
  const std::string c = trace_csv(run_scenario(config, run));
  return make_result(a == b && a == c, fmt::format("trace.csv {} across repeat and {} between 1 and 8 threads ({} bytes)",
                                                   a == b ? "identical" : "DIFFERS", a == c ? "identical" : "DIFFERS",
                                                   a.size()));
}

}  // namespace

const std::vector<Check>& registry() {
  static const std::vector<Check> checks{
      {"tdist", "gaussian_conditional", 1, gaussian_conditional},
      {"tdist", "t_conditional_quadrature", 2, t_conditional_quadrature},
      {"tdist", "sampling_covariance", 5, sampling_covariance},
      {"tdist", "gaussian_limit_ks", std::nullopt, gaussian_limit_ks},
      {"tdist", "log_pdf_gaussian_limit", std::nullopt, log_pdf_gaussian_limit},
      {"smoother", "kalman_rts", 3, kalman_rts},
      {"smoother", "enks_reduction", 4, enks_reduction},
      {"nmpc", "argmax_equivalence", 6, argmax_equivalence},
      {"nmpc", "log_posterior_gaussian_limit", std::nullopt, log_posterior_gaussian_limit},
      {"scenario", "scenario_parameters", 7, scenario_parameters},
      {"scenario", "emergency_brake_safety", 8, emergency_brake_safety},
      {"scenario", "trace_audit", std::nullopt, trace_audit},
      {"determinism", "thread_invariance", 9, thread_invariance},
  };
  return checks;
}

std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& c : registry()) {
    if (std::find(names.begin(), names.end(), c.suite) == names.end()) names.push_back(c.suite);
  }
  return names;
}

CheckResult run_check(const Check& check, const CheckOptions& options) {
  const auto start = Clock::now();
  CheckResult r;
  try {
    r = check.run(options);
  } catch (const std::exception& e) {
    r = make_result(false, std::string("error: ") + e.what());
  }
  r.suite = check.suite;
  r.name = check.name;
  r.seconds = seconds_since(start);
  return r;
}

std::vector<CheckResult> run_suite(const std::string& suite, const CheckOptions& options) {
  std::vector<CheckResult> out;
  for (const auto& c : registry()) {
    if (c.suite == suite) out.push_back(run_check(c, options));
  }
  if (out.empty()) throw std::invalid_argument("unknown suite '" + suite + "'");
  return out;
}

}  // namespace bimp::checks
