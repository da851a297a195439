#include "bimp/virtual_system.hpp"

#include "bimp/errors.hpp"

namespace bimp {

Eigen::VectorXd AugmentedState::pack() const {
  Eigen::VectorXd v(kAugmentedDim);
  v << x, u, du;
  return v;
}

AugmentedState AugmentedState::unpack(const Eigen::VectorXd& v) {
  if (v.size() != kAugmentedDim) throw DomainError("AugmentedState::unpack: wrong dimension");
  AugmentedState s;
  s.x = v.head<4>();
  s.u = v.segment<2>(4);
  s.du = v.segment<2>(6);
  return s;
}

Eigen::VectorXd VirtualMeasurement::pack() const {
  Eigen::VectorXd v(kStateDim + kInputDim + z.size());
  v << r, s, z;
  return v;
}

VirtualMeasurement VirtualMeasurement::unpack(const Eigen::VectorXd& v) {
  if (v.size() < kStateDim + kInputDim) throw DomainError("VirtualMeasurement::unpack: vector too short");
  VirtualMeasurement m;
  m.r = v.head<4>();
  m.s = v.segment<2>(4);
  m.z = v.tail(v.size() - kStateDim - kInputDim);
  return m;
}

AugmentedState augmented_step(const AugmentedState& state, const Eigen::Vector2d& w, const VehicleDynamics& dynamics) {
  AugmentedState next;
  const Eigen::VectorXd x = dynamics(state.x, state.u);
  if (x.size() != kStateDim || !x.allFinite()) throw PropagationError("augmented_step: non-finite dynamics output");
  next.x = x;
  next.du = w;
  next.u = state.u + next.du;
  return next;
}

Eigen::VectorXd augmented_transition(const Eigen::VectorXd& state, const VehicleDynamics& dynamics) {
  const Eigen::Index nx = dynamics.state_dim;
  const Eigen::Index nu = dynamics.input_dim;
  if (state.size() != nx + 2 * nu) throw DomainError("augmented_transition: wrong state dimension");
  Eigen::VectorXd next(state.size());
  next.head(nx) = dynamics(state.head(nx), state.segment(nx, nu));
  next.segment(nx, nu) = state.segment(nx, nu);
  next.tail(nu).setZero();
  return next;
}

Eigen::VectorXd assemble_process_noise(const Eigen::VectorXd& w, Eigen::Index state_dim) {
  Eigen::VectorXd out(state_dim + 2 * w.size());
  out.head(state_dim).setZero();
  out.segment(state_dim, w.size()) = w;
  out.tail(w.size()) = w;
  return out;
}

Eigen::MatrixXd process_noise_embedding(Eigen::Index state_dim, Eigen::Index input_dim) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(state_dim + 2 * input_dim, input_dim);
  g.middleRows(state_dim, input_dim).setIdentity();
  g.bottomRows(input_dim).setIdentity();
  return g;
}

std::vector<ObstacleState> Environment::obstacles_at(long step) const {
  return ov_states_at(obstacles, static_cast<double>(step) * dt);
}

VirtualMeasurement virtual_observe(const AugmentedState& state, const std::vector<ObstacleState>& obstacles,
                                   const RoadGeometry& road, const ConstraintParams& params) {
  VirtualMeasurement m;
  m.r = state.x;
  m.s = state.u;
  const auto n_obs = static_cast<Eigen::Index>(obstacles.size());
  const Eigen::VectorXd phi = constraint_vector(state.x, state.u, state.du, obstacles, road, params);
  m.z = barrier(phi, barrier_widths(params, n_obs), params.barrier);
  return m;
}

StateSpaceModel<double> make_virtual_model(VehicleDynamics dynamics, std::shared_ptr<const Environment> env) {
  if (!env) throw DomainError("make_virtual_model: missing environment");
  StateSpaceModel<double> model;
  model.transition = [dynamics = std::move(dynamics)](long, const Eigen::VectorXd& s) {
    return augmented_transition(s, dynamics);
  };
  model.observe = [env](long t, const Eigen::VectorXd& s) {
    return virtual_observe(AugmentedState::unpack(s), env->obstacles_at(t), env->road, env->params).pack();
  };
  model.noise_embedding = process_noise_embedding();
  model.measurement_dim = measurement_dim(static_cast<Eigen::Index>(env->obstacles.size()));
  return model;
}

}  // namespace bimp
