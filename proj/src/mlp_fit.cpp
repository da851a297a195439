#include <random>

#include "bimp/errors.hpp"
#include "bimp/random.hpp"
#include "bimp/vehicle.hpp"

namespace bimp {

namespace {

// Inputs are (x, y, heading, speed, accel, steer). Position does not enter
// the transition increment, so the x and y columns of the first layer stay zero.
struct Domain6 {
  Eigen::VectorXd lo, hi;
};

Domain6 domain_bounds(const FitDomain& d) {
  Domain6 b{Eigen::VectorXd(6), Eigen::VectorXd(6)};
  b.lo << 0, 0, d.heading_min, d.speed_min, d.accel_min, d.steer_min;
  b.hi << 0, 0, d.heading_max, d.speed_max, d.accel_max, d.steer_max;
  return b;
}

// Unclamped, unwrapped one-step increment; mlp_dynamics applies the clamp and the wrap.
Eigen::Vector4d increment(const Eigen::VectorXd& in, const BicycleParams& p) {
  const double heading = in[2], v = in[3], a = in[4], steer = in[5];
  return {v * std::cos(heading) * p.dt, v * std::sin(heading) * p.dt, v / p.wheelbase * std::tan(steer) * p.dt,
          a * p.dt};
}

Eigen::MatrixXd hidden_features(const std::vector<DenseLayer>& hidden, const Eigen::MatrixXd& normalized) {
  Eigen::MatrixXd h = normalized;
  for (const auto& layer : hidden) {
    h = ((layer.weights * h).colwise() + layer.bias).array().tanh();
  }
  return h;
}

}  // namespace

MlpModel fit_mlp_to_bicycle(const BicycleParams& params, const MlpFitOptions& options) {
  validate(params);
  if (options.hidden.empty()) throw DomainError("fit_mlp_to_bicycle: at least one hidden layer is required");
  const Domain6 bounds = domain_bounds(options.domain);
  Eigen::VectorXd in_shift = 0.5 * (bounds.lo + bounds.hi);
  Eigen::VectorXd in_scale = 0.5 * (bounds.hi - bounds.lo);
  in_scale[0] = in_scale[1] = 1.0;

  RandomEngine engine = StreamKey(options.seed).engine();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal;

  const Eigen::Index m = options.training_samples;
  Eigen::MatrixXd inputs(6, m);
  Eigen::MatrixXd targets(4, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd in(6);
    in[0] = 0.0;
    in[1] = 0.0;
    for (int i = 2; i < 6; ++i) in[i] = in_shift[i] + in_scale[i] * unit(engine);
    inputs.col(j) = in;
    targets.col(j) = increment(in, params);
  }
  Eigen::VectorXd out_shift = targets.rowwise().mean();
  Eigen::VectorXd out_scale =
      ((targets.colwise() - out_shift).array().square().rowwise().mean()).sqrt().matrix().cwiseMax(1e-12);

  // First hidden layer: each unit sees one input pair that drives an
  // increment, (heading, speed), (speed, steer) or (speed, accel), in the
  // proportions 1/2, 3/8, 1/8. Later hidden layers run in the near-linear
  // range of tanh, so the output layer effectively regresses on the
  // first-layer features.
  std::vector<DenseLayer> layers;
  Eigen::Index width = 6;
  for (std::size_t l = 0; l < options.hidden.size(); ++l) {
    const Eigen::Index h = options.hidden[l];
    DenseLayer layer{Eigen::MatrixXd::Zero(h, width), Eigen::VectorXd::Zero(h)};
    if (l == 0) {
      for (Eigen::Index r = 0; r < h; ++r) {
        const int pair = (8 * r < 4 * h) ? 0 : (8 * r < 7 * h ? 1 : 2);
        const int first = (pair == 0) ? 2 : 3;
        const int second = (pair == 0) ? 3 : (pair == 1 ? 5 : 4);
        layer.weights(r, first) = options.feature_gain * normal(engine);
        layer.weights(r, second) = options.feature_gain * normal(engine);
        layer.bias[r] = options.feature_gain * unit(engine);
      }
    } else {
      const Eigen::Index n = std::min(h, width);
      layer.weights.topLeftCorner(n, n).diagonal().setConstant(options.pass_gain);
      for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < width; ++c) layer.weights(r, c) += 1e-3 * normal(engine);
      }
    }
    layers.push_back(std::move(layer));
    width = h;
  }

  const Eigen::MatrixXd normalized = (inputs.colwise() - in_shift).array().colwise() / in_scale.array();
  const Eigen::MatrixXd features = hidden_features(layers, normalized);
  Eigen::MatrixXd design(width + 1, m);
  design.topRows(width) = features;
  design.bottomRows(1).setOnes();
  const Eigen::MatrixXd y = (targets.colwise() - out_shift).array().colwise() / out_scale.array();

  Eigen::MatrixXd gram = design * design.transpose();
  gram.diagonal().array() += options.ridge * static_cast<double>(m);
  const Eigen::MatrixXd solution = gram.ldlt().solve(design * y.transpose());  // (width+1) x 4

  DenseLayer output{solution.topRows(width).transpose(), solution.bottomRows(1).transpose()};
  layers.push_back(std::move(output));
  return MlpModel(std::move(layers), Activation::kTanh, OutputConvention::kResidual, std::move(in_shift),
                  std::move(in_scale), std::move(out_shift), std::move(out_scale));
}

FitReport validate_fit(const MlpModel& model, const BicycleParams& params, const FitDomain& domain,
                       int points_per_axis) {
  const VehicleDynamics net = mlp_dynamics(model, params);
  const Domain6 bounds = domain_bounds(domain);
  FitReport report;
  const int n = std::max(points_per_axis, 2);
  auto grid = [&](int axis, int i) {
    return bounds.lo[axis] + (bounds.hi[axis] - bounds.lo[axis]) * static_cast<double>(i) / (n - 1);
  };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int d = 0; d < n; ++d) {
          Eigen::Vector4d x(10.0 * a, -5.0 * b, grid(2, a), grid(3, b));
          Eigen::Vector2d u(grid(4, c), grid(5, d));
          const Eigen::Vector4d truth = bicycle_step<double>(x, u, params);
          const Eigen::VectorXd pred = net(x, u);
          report.max_position_error = std::max(report.max_position_error, (pred.head(2) - truth.head(2)).norm());
          report.max_heading_error = std::max(report.max_heading_error, std::abs(wrap_angle(pred[2] - truth[2])));
          report.max_speed_error = std::max(report.max_speed_error, std::abs(pred[3] - truth[3]));
          ++report.grid_points;
        }
      }
    }
  }
  return report;
}

}  // namespace bimp
