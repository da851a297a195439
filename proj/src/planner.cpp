#include "bimp/planner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "bimp/errors.hpp"

namespace bimp {

ReferenceHorizon generate_references(const ScenarioConfig& config, double arc_length, long step, int horizon) {
  ReferenceHorizon out;
  const double dt = config.planner.dt;
  const double wheelbase = config.vehicle.params.wheelbase;
  double s = arc_length;
  for (int i = 0; i <= horizon; ++i) {
    const double t = static_cast<double>(step + i) * dt;
    const double speed = config.reference.speed.at(t);
    const Eigen::Vector2d p = config.road.point_at(s, config.reference.lateral.at(t));
    out.r.emplace_back(p.x(), p.y(), config.road.heading_at(s), speed);
    out.s.emplace_back(0.0, std::atan(wheelbase * config.road.curvature_at(s)));
    s += speed * dt;
  }
  return out;
}

SmootherConfig<double> make_smoother_config(const ScenarioConfig& config, int threads) {
  const PlannerSettings& p = config.planner;
  const DofSet& dofs = p.dofs();
  SmootherConfig<double> s;
  s.ensemble_size = p.ensemble_size;
  s.dof_init = dofs.nu;
  s.dof_growth = p.dof_growth;
  s.innovation_mode = p.innovation_mode;
  s.regularization.initial = p.jitter;
  s.process_noise = NoiseBlock<double>::diagonal(p.sigma_w.array().square().matrix(), dofs.nu_w);
  const auto n_z = constraint_count(static_cast<Eigen::Index>(config.obstacles.size()));
  s.measurement_noise = {
      NoiseBlock<double>::diagonal(p.sigma_vx.array().square().matrix(), dofs.nu_x),
      NoiseBlock<double>::diagonal(p.sigma_vu.array().square().matrix(), dofs.nu_u),
      NoiseBlock<double>::diagonal(Eigen::VectorXd::Constant(n_z, p.sigma_vz * p.sigma_vz), dofs.nu_z),
  };
  s.threads = std::max(threads, 1);
  return s;
}

PlannerContext make_context(const ScenarioConfig& config, int threads) {
  PlannerContext ctx;
  ctx.config = std::make_shared<const ScenarioConfig>(config);
  auto env = std::make_shared<Environment>(Environment{config.road, config.obstacles, config.constraints, config.planner.dt});
  ctx.environment = env;
  ctx.planner = planner_dynamics(config);
  ctx.plant = config.plant == PlantModel::kSame ? ctx.planner : plant_dynamics(config);
  ctx.model = make_virtual_model(ctx.planner, ctx.environment);
  ctx.smoother = make_smoother_config(config, threads);
  return ctx;
}

PlanResult plan_step(const PlannerContext& ctx, const Eigen::Vector4d& x, const Eigen::Vector2d& u_prev, long k,
                     double dof, StreamKey key) {
  const ScenarioConfig& cfg = *ctx.config;
  const int horizon = cfg.planner.horizon;
  const AugmentedState center{x, u_prev, Eigen::Vector2d::Zero()};
  auto ens = initialize_ensemble<double>(center.pack(), ctx.model.noise_embedding, ctx.smoother.process_noise,
                                         cfg.planner.ensemble_size, k, dof, key.child(0));

  const double arc = cfg.road.project(x.head<2>()).arc_length;
  const ReferenceHorizon refs = generate_references(cfg, arc, k, horizon);
  const auto n_z = constraint_count(static_cast<Eigen::Index>(cfg.obstacles.size()));
  std::vector<Eigen::VectorXd> observations;
  observations.reserve(static_cast<std::size_t>(horizon));
  for (int i = 1; i <= horizon; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    observations.push_back(VirtualMeasurement{refs.r[idx], refs.s[idx], Eigen::VectorXd::Zero(n_z)}.pack());
  }

  auto smoothed = smooth_horizon(std::move(ens), ctx.model, observations, ctx.smoother, key);
  PlanResult out;
  out.plan = std::move(smoothed.mean_trajectory);
  out.plan.col(0).head<4>() = x;
  out.applied_u = out.plan.col(0).segment<2>(4);
  out.diagnostics = std::move(smoothed.diagnostics);
  out.final_dof = out.diagnostics.empty() ? dof : out.diagnostics.back().dof;
  double sum = 0.0;
  for (const auto& d : out.diagnostics) sum += d.delta;
  out.mean_delta = out.diagnostics.empty() ? 0.0 : sum / static_cast<double>(out.diagnostics.size());
  return out;
}

unsigned violation_flags(const std::vector<double>& ov_distances, double boundary_margin, const Eigen::Vector2d& u,
                         const Eigen::Vector2d& du, const ConstraintParams& params, double road_margin) {
  unsigned flags = 0;
  for (double d : ov_distances) {
    if (d < params.d_min) flags |= kSafetyDistance;
  }
  if (boundary_margin < road_margin) flags |= kRoadBoundary;
  if ((u.array() < params.u_min.array()).any() || (u.array() > params.u_max.array()).any()) flags |= kInputBounds;
  if ((du.array() < params.du_min.array()).any() || (du.array() > params.du_max.array()).any()) flags |= kRateBounds;
  return flags;
}

ScenarioConfig apply_options(ScenarioConfig config, const RunOptions& options) {
  if (options.seed) config.planner.seed = *options.seed;
  if (options.mode) config.planner.mode = *options.mode;
  if (options.max_steps) config.termination.max_steps = *options.max_steps;
  return config;
}

namespace {

[[noreturn]] void rethrow_at_step(long k) {
  auto annotate = [k](const char* what) {
    std::ostringstream os;
    os << "step " << k << ": " << what;
    return os.str();
  };
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(annotate(e.what()));
  } catch (const PropagationError& e) {
    throw PropagationError(annotate(e.what()));
  } catch (const DomainError& e) {
    throw DomainError(annotate(e.what()));
  } catch (const std::exception& e) {
    throw std::runtime_error(annotate(e.what()));
  }
}

}  // namespace

RunTrace run_scenario(const ScenarioConfig& base, const RunOptions& options) {
  const ScenarioConfig config = apply_options(base, options);
  const PlannerContext ctx = make_context(config, options.threads);
  const Environment& env = *ctx.environment;
  const int horizon = config.planner.horizon;
  const StreamKey master(config.planner.seed);

  RunTrace trace;
  trace.scenario = config.name;
  trace.mode = config.planner.mode;
  trace.seed = config.planner.seed;

  Eigen::Vector4d x = config.ego.x;
  Eigen::Vector2d u_prev = config.ego.u;
  double dof = config.planner.dofs().nu;
  std::optional<PlanResult> current;
  long plan_start = 0;
  std::string termination = "max_steps";

  for (long k = 0; k < config.termination.max_steps; ++k) {
    try {
      const auto started = std::chrono::steady_clock::now();
      const bool replan = config.planner.apply == ApplyMode::kFirst || !current || k - plan_start > horizon;
      if (replan) {
        current = plan_step(ctx, x, u_prev, k, dof, master.child(static_cast<std::uint64_t>(k)));
        plan_start = k;
        if (config.planner.dof_growth == DofGrowth::kAccumulate) dof = current->final_dof;
      }
      const Eigen::Vector2d u = current->plan.col(k - plan_start).segment<2>(4);

      StepRecord rec;
      rec.step = k;
      rec.t = static_cast<double>(k) * config.planner.dt;
      rec.x = x;
      rec.u = u;
      rec.du = u - u_prev;
      const Pose ego{x[0], x[1], x[2]};
      bool any_overlap = false;
      for (const auto& ov : env.obstacles_at(k)) {
        const double d = collision_distance(ego, config.constraints.ego, ov.pose, ov.footprint,
                                            config.constraints.vehicle_margin);
        rec.ov_distances.push_back(d);
        any_overlap = any_overlap || d < 0.0;
      }
      rec.boundary_margin = boundary_margin(ego, config.road, rec.extrapolated);
      rec.flags = violation_flags(rec.ov_distances, rec.boundary_margin, rec.u, rec.du, config.constraints,
                                  config.road.margin());
      rec.delta = current->mean_delta;
      rec.nu = current->final_dof;
      const auto projection = config.road.project(x.head<2>());
      rec.lateral_error = projection.lateral - config.reference.lateral.at(rec.t);
      rec.speed_error = x[3] - config.reference.speed.at(rec.t);
      if (options.keep_plans) trace.plans.push_back(current->plan);

      const Eigen::VectorXd next = ctx.plant(x, u);
      if (!next.allFinite()) throw PropagationError("plant produced a non-finite state");
      if (options.timing) {
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      }
      trace.records.push_back(std::move(rec));
      if (any_overlap && config.termination.stop_on_collision) {
        termination = "collision";
        break;
      }
      x = next;
      u_prev = u;
    } catch (...) {
      rethrow_at_step(k);
    }
  }
  trace.summary = summarize(trace.records, termination);
  return trace;
}

RunSummary summarize(const std::vector<StepRecord>& records, const std::string& termination) {
  RunSummary s;
  s.steps = static_cast<long>(records.size());
  s.termination = termination;
  s.min_boundary_margin = records.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  double lat2 = 0.0;
  double speed2 = 0.0;
  for (const auto& r : records) {
    for (double d : r.ov_distances) {
      if (!s.min_ov_distance || d < *s.min_ov_distance) s.min_ov_distance = d;
      if (d < 0.0 && !s.collision_step) s.collision_step = r.step;
    }
    if ((r.flags & kSafetyDistance) && !s.first_safety_violation_step) s.first_safety_violation_step = r.step;
    s.min_boundary_margin = std::min(s.min_boundary_margin, r.boundary_margin);
    s.safety_violations += (r.flags & kSafetyDistance) ? 1 : 0;
    s.boundary_violations += (r.flags & kRoadBoundary) ? 1 : 0;
    s.input_violations += (r.flags & kInputBounds) ? 1 : 0;
    s.rate_violations += (r.flags & kRateBounds) ? 1 : 0;
    s.extrapolated_steps += r.extrapolated ? 1 : 0;
    lat2 += r.lateral_error * r.lateral_error;
    speed2 += r.speed_error * r.speed_error;
    s.wall_ms_total += r.wall_ms;
  }
  if (!records.empty()) {
    s.lateral_rmse = std::sqrt(lat2 / static_cast<double>(records.size()));
    s.speed_rmse = std::sqrt(speed2 / static_cast<double>(records.size()));
  }
  return s;
}

}  // namespace bimp
