// Vehicle transition models x+ = f(x, u).
//
// State layout: (x [m], y [m], heading [rad], speed [m/s]).
// Input layout: (acceleration [m/s^2], steering angle [rad]).
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace bimp {

inline constexpr Eigen::Index kStateDim = 4;
inline constexpr Eigen::Index kInputDim = 2;

struct BicycleParams {
  double wheelbase = 2.7;
  double dt = 0.1;
  double v_min = 0.0;
  double v_max = 40.0;
};

void validate(const BicycleParams& params);

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi_v<Scalar>) a += two_pi;
  if (a > std::numbers::pi_v<Scalar>) a -= two_pi;
  return a;
}

/// Kinematic bicycle, explicit Euler over params.dt.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> bicycle_step(const Eigen::Matrix<Scalar, 4, 1>& x, const Eigen::Matrix<Scalar, 2, 1>& u,
                                         const BicycleParams& params) {
  const Scalar dt = static_cast<Scalar>(params.dt);
  const Scalar heading = x[2];
  const Scalar v = x[3];
  Eigen::Matrix<Scalar, 4, 1> next;
  next[0] = x[0] + v * std::cos(heading) * dt;
  next[1] = x[1] + v * std::sin(heading) * dt;
  next[2] = wrap_angle<Scalar>(heading + (v / static_cast<Scalar>(params.wheelbase)) * std::tan(u[1]) * dt);
  next[3] = std::clamp<Scalar>(v + u[0] * dt, static_cast<Scalar>(params.v_min), static_cast<Scalar>(params.v_max));
  return next;
}

enum class Activation : std::int32_t { kTanh = 0, kRelu = 1 };
enum class OutputConvention : std::int32_t { kAbsolute = 0, kResidual = 1 };

struct DenseLayer {
  Eigen::MatrixXd weights;  ///< out x in
  Eigen::VectorXd bias;
};

/// Feed-forward network: normalize, hidden affine+activation layers,
/// linear output layer, denormalize.
class MlpModel {
 public:
  MlpModel(std::vector<DenseLayer> layers, Activation activation, OutputConvention convention,
           Eigen::VectorXd input_shift, Eigen::VectorXd input_scale, Eigen::VectorXd output_shift,
           Eigen::VectorXd output_scale);

  /// Zero-weight network of the given shape (identity under the residual convention).
  static MlpModel zeros(Eigen::Index input_dim, Eigen::Index output_dim, const std::vector<Eigen::Index>& hidden,
                        Activation activation = Activation::kTanh,
                        OutputConvention convention = OutputConvention::kResidual);

  [[nodiscard]] Eigen::Index input_dim() const { return input_shift_.size(); }
  [[nodiscard]] Eigen::Index output_dim() const { return output_shift_.size(); }
  [[nodiscard]] std::vector<Eigen::Index> hidden_widths() const;
  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  [[nodiscard]] Activation activation() const { return activation_; }
  [[nodiscard]] OutputConvention convention() const { return convention_; }
  [[nodiscard]] const Eigen::VectorXd& input_shift() const { return input_shift_; }
  [[nodiscard]] const Eigen::VectorXd& input_scale() const { return input_scale_; }
  [[nodiscard]] const Eigen::VectorXd& output_shift() const { return output_shift_; }
  [[nodiscard]] const Eigen::VectorXd& output_scale() const { return output_scale_; }

  /// Upper bound on the Lipschitz constant of the raw network map
  /// (input -> denormalized output), computed at construction.
  [[nodiscard]] double lipschitz_bound() const { return lipschitz_; }

  /// Denormalized network output for a raw input vector.
  [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& input) const;

 private:
  std::vector<DenseLayer> layers_;
  Activation activation_;
  OutputConvention convention_;
  Eigen::VectorXd input_shift_, input_scale_, output_shift_, output_scale_;
  double lipschitz_ = 0.0;
};

/// Next state from the network. Under the residual convention the network
/// predicts the increment and the result is state + increment.
Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::VectorXd& state, const Eigen::VectorXd& input);

/// Binary weight file (little-endian):
///   "MLPW1\n"
///   int32 input_dim, output_dim, hidden_count, hidden widths..., activation, convention
///   float64 input_shift[in], input_scale[in], output_shift[out], output_scale[out]
///   per layer: weights (row-major, out x in), bias[out]
std::string serialize_weights(const MlpModel& model);
MlpModel parse_weights(const std::string& bytes);
MlpModel load_weights(const std::string& path);
void save_weights(const MlpModel& model, const std::string& path);

/// Writes "<stem>.manifest" next to a weight file: one "key: value" line per entry.
void write_manifest(const std::string& weights_path, const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_manifest(const std::string& weights_path);

/// A state transition x+ = f(x, u) behind a uniform interface.
struct VehicleDynamics {
  std::string name;
  Eigen::Index state_dim = kStateDim;
  Eigen::Index input_dim = kInputDim;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> step;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const { return step(x, u); }
};

VehicleDynamics bicycle_dynamics(const BicycleParams& params);
/// Network dynamics with heading wrapped and speed clamped to the bicycle bounds.
VehicleDynamics mlp_dynamics(MlpModel model, const BicycleParams& params);

/// Input domain of the synthetic fit and of its validation grid.
struct FitDomain {
  double speed_min = 0.0, speed_max = 35.0;
  double heading_min = -std::numbers::pi / 2, heading_max = std::numbers::pi / 2;
  double accel_min = -9.0, accel_max = 5.0;
  double steer_min = -0.6, steer_max = 0.6;
};

struct MlpFitOptions {
  FitDomain domain;
  std::vector<Eigen::Index> hidden = {128, 128};
  Eigen::Index training_samples = 60000;
  double ridge = 1e-12;
  double feature_gain = 1.0;  ///< first-layer weight and bias spread
  double pass_gain = 0.1;     ///< diagonal gain of later hidden layers
  std::uint64_t seed = 20240611;
};

struct FitReport {
  double max_position_error = 0.0;  ///< metres, over the validation grid
  double max_heading_error = 0.0;
  double max_speed_error = 0.0;
  long grid_points = 0;
};

/// Deterministic least-squares fit of a residual MLP to one-step bicycle
/// transitions: the first hidden layer holds random tanh features of input
/// pairs, later hidden layers pass them through nearly linearly, and the
/// output layer is solved by ridge regression.
MlpModel fit_mlp_to_bicycle(const BicycleParams& params, const MlpFitOptions& options = {});

/// One-step errors of `model` against bicycle_step on a regular grid over the domain.
FitReport validate_fit(const MlpModel& model, const BicycleParams& params, const FitDomain& domain,
                       int points_per_axis = 9);

}  // namespace bimp
