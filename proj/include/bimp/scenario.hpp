// Scenario files: road, obstacle scripts, ego start, reference policy,
// vehicle model, constraints, planner settings and termination.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bimp/constraints.hpp"
#include "bimp/ensemble_smoother.hpp"
#include "bimp/vehicle.hpp"

namespace bimp {

/// Piecewise-linear function of time through (time, value) knots, held
/// constant before the first and after the last knot.
class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<std::pair<double, double>> knots);
  static Schedule constant(double value) { return Schedule({{0.0, value}}); }

  [[nodiscard]] double at(double time) const;
  [[nodiscard]] const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

enum class PlannerMode { kEnKTS, kEnKS };
enum class ApplyMode { kFirst, kWholePlan };
enum class VehicleModel { kBicycle, kMlp };
enum class PlantModel { kSame, kBicycle };

const char* to_string(PlannerMode mode);
PlannerMode parse_planner_mode(const std::string& text);

/// Degrees of freedom of the joint and of the four noise laws.
struct DofSet {
  double nu = 5.0;
  double nu_w = 5.0;
  double nu_x = 5.0;
  double nu_u = 5.0;
  double nu_z = 5.0;
};

struct PlannerSettings {
  Eigen::Index ensemble_size = 50;
  int horizon = 20;
  double dt = 0.1;
  std::uint64_t seed = 1;
  PlannerMode mode = PlannerMode::kEnKTS;
  InnovationMode innovation_mode = InnovationMode::kPerturbedObservation;
  DofGrowth dof_growth = DofGrowth::kResetPerStep;
  ApplyMode apply = ApplyMode::kFirst;
  double jitter = 1e-8;
  DofSet enkts{};
  DofSet enks{1e10, 1e10, 1e10, 1e10, 1e10};
  /// Scale (not covariance) standard deviations of the noise laws.
  Eigen::Vector2d sigma_w{0.5, 0.02};
  Eigen::Vector4d sigma_vx{1.0, 1.0, 0.2, 1.0};
  Eigen::Vector2d sigma_vu{2.0, 0.2};
  double sigma_vz = 1.0;

  [[nodiscard]] const DofSet& dofs() const { return mode == PlannerMode::kEnKTS ? enkts : enks; }
};

struct EgoStart {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
};

/// Reference speed and lateral lane offset as functions of time.
struct ReferencePolicy {
  Schedule speed = Schedule::constant(0.0);
  Schedule lateral = Schedule::constant(0.0);
};

struct VehicleConfig {
  VehicleModel model = VehicleModel::kBicycle;
  std::string weights;  ///< resolved path, MLP only
  BicycleParams params;
};

struct Termination {
  long max_steps = 100;
  bool stop_on_collision = false;
};

struct ScenarioConfig {
  explicit ScenarioConfig(RoadGeometry r) : road(std::move(r)) {}

  std::string name;
  RoadGeometry road;
  std::vector<ObstacleScript> obstacles;
  EgoStart ego;
  ReferencePolicy reference;
  VehicleConfig vehicle;
  PlantModel plant = PlantModel::kSame;
  ConstraintParams constraints;
  PlannerSettings planner;
  Termination termination;
};

/// Parses a scenario document. Relative file references resolve against
/// base_dir. Unknown keys, missing required keys and invalid values are
/// FormatErrors naming the offending key path.
ScenarioConfig parse_scenario(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

/// Vehicle model selected by the scenario (loads weights for the MLP).
VehicleDynamics planner_dynamics(const ScenarioConfig& config);
VehicleDynamics plant_dynamics(const ScenarioConfig& config);

}  // namespace bimp
