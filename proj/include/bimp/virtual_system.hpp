// Auxiliary system whose state is (x, u, du) and whose "measurements" are
// the references (r, s) and the barrier channel z.
//
//   x+  = f(x, u)          (old input)
//   du+ = w
//   u+  = u + du+
//   r = x + v_x,  s = u + v_u,  z = barrier(phi(x, u, du)) + v_z
#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "bimp/constraints.hpp"
#include "bimp/ensemble_smoother.hpp"
#include "bimp/vehicle.hpp"

namespace bimp {

inline constexpr Eigen::Index kAugmentedDim = kStateDim + 2 * kInputDim;

struct AugmentedState {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d du = Eigen::Vector2d::Zero();

  [[nodiscard]] Eigen::VectorXd pack() const;
  static AugmentedState unpack(const Eigen::VectorXd& v);
};

struct VirtualMeasurement {
  Eigen::Vector4d r = Eigen::Vector4d::Zero();
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  Eigen::VectorXd z;

  [[nodiscard]] Eigen::VectorXd pack() const;
  static VirtualMeasurement unpack(const Eigen::VectorXd& v);
};

/// Measurement dimension for a scenario with the given obstacle count.
constexpr Eigen::Index measurement_dim(Eigen::Index obstacles) {
  return kStateDim + kInputDim + constraint_count(obstacles);
}

AugmentedState augmented_step(const AugmentedState& state, const Eigen::Vector2d& w,
                              const VehicleDynamics& dynamics);

/// Noise-free part of the augmented transition: (f(x, u), u, 0).
Eigen::VectorXd augmented_transition(const Eigen::VectorXd& state, const VehicleDynamics& dynamics);

/// (0, w, w)
Eigen::VectorXd assemble_process_noise(const Eigen::VectorXd& w, Eigen::Index state_dim = kStateDim);

/// G with assemble_process_noise(w) == G * w.
Eigen::MatrixXd process_noise_embedding(Eigen::Index state_dim = kStateDim, Eigen::Index input_dim = kInputDim);

/// Road, obstacles and constraint settings seen by the virtual observation.
struct Environment {
  RoadGeometry road;
  std::vector<ObstacleScript> obstacles;
  ConstraintParams params;
  double dt = 0.1;

  [[nodiscard]] std::vector<ObstacleState> obstacles_at(long step) const;
};

VirtualMeasurement virtual_observe(const AugmentedState& state, const std::vector<ObstacleState>& obstacles,
                                   const RoadGeometry& road, const ConstraintParams& params);

/// State-space model over packed augmented states; the environment is
/// evaluated at time step * dt of the state being observed.
StateSpaceModel<double> make_virtual_model(VehicleDynamics dynamics, std::shared_ptr<const Environment> env);

}  // namespace bimp
