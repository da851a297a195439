#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "bimp/errors.hpp"
#include "bimp/vehicle.hpp"

using namespace bimp;

namespace {

const std::string kWeights = BIMP_SOURCE_DIR "/data/bicycle_mlp.mlpw";

Eigen::Vector4d rotate(const Eigen::Vector4d& x, double phi) {
  const Eigen::Rotation2Dd r(phi);
  Eigen::Vector4d out = x;
  out.head<2>() = r * x.head<2>();
  out[2] = wrap_angle(x[2] + phi);
  return out;
}

}  // namespace

TEST_CASE("bicycle step") {
  const BicycleParams p;
  const Eigen::Vector2d zero_u = Eigen::Vector2d::Zero();

  const Eigen::Vector4d rest(3.0, -2.0, 0.4, 0.0);
  CHECK(bicycle_step<double>(rest, zero_u, p) == rest);

  const Eigen::Vector4d cruise(0.0, 0.0, 0.0, 10.0);
  const Eigen::Vector4d next = bicycle_step<double>(cruise, zero_u, p);
  CHECK((next - Eigen::Vector4d(1.0, 0.0, 0.0, 10.0)).norm() < 1e-14);

  const Eigen::Vector4d turned = bicycle_step<double>(cruise, Eigen::Vector2d(0.0, 0.1), p);
  CHECK(turned[2] == doctest::Approx(10.0 / 2.7 * std::tan(0.1) * 0.1));
  CHECK(turned[2] == doctest::Approx(0.03717).epsilon(1e-4));
}

TEST_CASE("bicycle heading wraps and speed clamps") {
  BicycleParams p;
  p.v_max = 12.0;
  const Eigen::Vector4d x(0.0, 0.0, std::numbers::pi - 0.01, 11.9);
  const Eigen::Vector4d next = bicycle_step<double>(x, Eigen::Vector2d(5.0, 0.4), p);
  CHECK(next[2] > -std::numbers::pi);
  CHECK(next[2] <= std::numbers::pi);
  CHECK(next[2] < 0.0);
  CHECK(next[3] == 12.0);
}

TEST_CASE("bicycle step is rotation equivariant") {
  const BicycleParams p;
  const Eigen::Vector4d x(1.2, -0.7, 0.3, 14.0);
  const Eigen::Vector2d u(1.5, -0.08);
  for (double phi : {0.5, -1.1, 2.9}) {
    const Eigen::Vector4d a = bicycle_step<double>(rotate(x, phi), u, p);
    const Eigen::Vector4d b = rotate(bicycle_step<double>(x, u, p), phi);
    CHECK((a.head<2>() - b.head<2>()).norm() < 1e-10);
    CHECK(std::abs(wrap_angle(a[2] - b[2])) < 1e-10);
    CHECK(a[3] == doctest::Approx(b[3]));
  }
}

TEST_CASE("zero-weight network is the identity") {
  const MlpModel m = MlpModel::zeros(6, 4, {128, 128});
  const Eigen::Vector4d x(1.0, 2.0, 0.3, 9.0);
  CHECK(mlp_forward(m, x, Eigen::Vector2d(0.5, 0.1)) == Eigen::VectorXd(x));
}

TEST_CASE("single-neuron network matches hand computation") {
  DenseLayer hidden{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Constant(1, 0.1)};
  hidden.weights << 0.5, -0.25;
  DenseLayer out{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, -0.3)};
  const MlpModel m({hidden, out}, Activation::kTanh, OutputConvention::kAbsolute, Eigen::Vector2d(1.0, 0.0),
                   Eigen::Vector2d(2.0, 4.0), Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 3.0));
  const Eigen::Vector2d in(3.0, 2.0);
  const double h = std::tanh(0.5 * (3.0 - 1.0) / 2.0 - 0.25 * 2.0 / 4.0 + 0.1);
  const double expected = (2.0 * h - 0.3) * 3.0 + 0.5;
  CHECK(std::abs(m.evaluate(in)[0] - expected) < 1e-12);
  CHECK(std::isfinite(m.lipschitz_bound()));
}

TEST_CASE("shipped weights are 6-128-128-4 and fit the bicycle") {
  const MlpModel m = load_weights(kWeights);
  CHECK(m.input_dim() == 6);
  CHECK(m.output_dim() == 4);
  REQUIRE(m.layers().size() == 3);
  CHECK(m.layers()[0].weights.rows() == 128);
  CHECK(m.layers()[0].weights.cols() == 6);
  CHECK(m.layers()[1].weights.rows() == 128);
  CHECK(m.layers()[1].weights.cols() == 128);
  CHECK(m.layers()[2].weights.rows() == 4);

  BicycleParams p;
  p.v_max = 35.0;
  const FitReport report = validate_fit(m, p, FitDomain{});
  CHECK(report.grid_points > 0);
  CHECK(report.max_position_error < 0.05);
}

TEST_CASE("weight files round-trip and reject truncation") {
  const std::string bytes = [] {
    std::ifstream in(kWeights, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  CHECK(serialize_weights(parse_weights(bytes)) == bytes);

  const auto tmp = std::filesystem::temp_directory_path() / "bimp_roundtrip.mlpw";
  save_weights(load_weights(kWeights), tmp.string());
  std::ifstream in(tmp, std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(in), {}) == bytes);
  std::filesystem::remove(tmp);

  const std::string cut = bytes.substr(0, bytes.size() - 100);
  std::string message;
  try {
    (void)parse_weights(cut);
  } catch (const FormatError& e) {
    message = e.what();
  }
  CHECK(message.find(std::to_string(bytes.size())) != std::string::npos);
  CHECK(message.find(std::to_string(cut.size())) != std::string::npos);
  CHECK_THROWS_AS((void)parse_weights("MLPX1\n"), FormatError);
}

TEST_CASE("network dynamics wrap heading and clamp speed") {
  BicycleParams p;
  p.v_max = 35.0;
  const VehicleDynamics f = mlp_dynamics(load_weights(kWeights), p);
  const Eigen::VectorXd next = f(Eigen::Vector4d(0.0, 0.0, std::numbers::pi - 0.005, 34.95),
                                 Eigen::Vector2d(3.0, 0.3));
  CHECK(next[2] > -std::numbers::pi);
  CHECK(next[2] <= std::numbers::pi);
  CHECK(next[3] <= 35.0);
}
