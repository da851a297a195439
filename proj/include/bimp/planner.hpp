// Receding-horizon planning loop over a scenario.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bimp/ensemble_smoother.hpp"
#include "bimp/scenario.hpp"
#include "bimp/virtual_system.hpp"

namespace bimp {

/// Virtual-observation references for t = k..k+H.
struct ReferenceHorizon {
  std::vector<Eigen::Vector4d> r;
  std::vector<Eigen::Vector2d> s;
};

/// r: centerline points advanced from `arc_length` at the scheduled speed,
/// offset by the scheduled lateral, with road heading and scheduled speed.
/// s: zero acceleration and steering atan(wheelbase * curvature).
ReferenceHorizon generate_references(const ScenarioConfig& config, double arc_length, long step, int horizon);

/// Everything a run needs that does not change from step to step.
struct PlannerContext {
  std::shared_ptr<const ScenarioConfig> config;
  std::shared_ptr<const Environment> environment;
  VehicleDynamics planner;
  VehicleDynamics plant;
  StateSpaceModel<double> model;
  SmootherConfig<double> smoother;
};

/// Smoother settings for the scenario's active mode.
SmootherConfig<double> make_smoother_config(const ScenarioConfig& config, int threads);

PlannerContext make_context(const ScenarioConfig& config, int threads = 1);

struct PlanResult {
  Eigen::Vector2d applied_u = Eigen::Vector2d::Zero();
  /// Smoothed augmented states, one column per t = k..k+H; the first
  /// column's x equals the world state.
  Eigen::MatrixXd plan;
  std::vector<UpdateDiagnostics<double>> diagnostics;
  double mean_delta = 0.0;
  double final_dof = 0.0;
};

/// One planning step at time index k from world state x and the previously
/// applied input. `dof` is the joint dof the ensemble starts from.
PlanResult plan_step(const PlannerContext& ctx, const Eigen::Vector4d& x, const Eigen::Vector2d& u_prev, long k,
                     double dof, StreamKey key);

/// Violation bits of one step.
enum ViolationFlag : unsigned {
  kSafetyDistance = 1,  ///< some obstacle closer than d_min
  kRoadBoundary = 2,    ///< boundary margin below the road margin
  kInputBounds = 4,     ///< u outside [u_min, u_max]
  kRateBounds = 8,      ///< du outside [du_min, du_max]
};

unsigned violation_flags(const std::vector<double>& ov_distances, double boundary_margin, const Eigen::Vector2d& u,
                         const Eigen::Vector2d& du, const ConstraintParams& params, double road_margin);

struct StepRecord {
  long step = 0;
  double t = 0.0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d du = Eigen::Vector2d::Zero();
  std::vector<double> ov_distances;
  double boundary_margin = 0.0;
  bool extrapolated = false;
  unsigned flags = 0;
  double delta = 0.0;
  double nu = 0.0;
  double wall_ms = 0.0;
  double lateral_error = 0.0;
  double speed_error = 0.0;
};

struct RunSummary {
  long steps = 0;
  std::string termination;  ///< "max_steps" or "collision"
  std::optional<double> min_ov_distance;
  double min_boundary_margin = 0.0;
  long safety_violations = 0;
  long boundary_violations = 0;
  long input_violations = 0;
  long rate_violations = 0;
  std::optional<long> collision_step;
  std::optional<long> first_safety_violation_step;
  double lateral_rmse = 0.0;
  double speed_rmse = 0.0;
  double wall_ms_total = 0.0;
  long extrapolated_steps = 0;

  [[nodiscard]] long total_violations() const {
    return safety_violations + boundary_violations + input_violations + rate_violations;
  }
};

struct RunTrace {
  std::string scenario;
  PlannerMode mode = PlannerMode::kEnKTS;
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  std::vector<Eigen::MatrixXd> plans;  ///< per-step plans when requested
  RunSummary summary;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<PlannerMode> mode;
  std::optional<long> max_steps;
  int threads = 1;
  bool timing = false;  ///< record wall time per step (otherwise 0, keeping traces reproducible)
  bool keep_plans = false;
};

/// Scenario with the options' seed, mode and step overrides applied.
ScenarioConfig apply_options(ScenarioConfig config, const RunOptions& options);

/// Runs the scenario: references, plan, step the plant, record. Errors
/// are rethrown with the step index prepended.
RunTrace run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

RunSummary summarize(const std::vector<StepRecord>& records, const std::string& termination);

}  // namespace bimp
