#include <doctest.h>

#include <cmath>

#include "bimp/ensemble_smoother.hpp"
#include "bimp/vehicle.hpp"

using namespace bimp;

namespace {

using Model = StateSpaceModel<double>;

Model linear_model(const Eigen::MatrixXd& a, const Eigen::MatrixXd& h) {
  Model m;
  m.transition = [a](long, const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };
  m.observe = [h](long, const Eigen::VectorXd& x) { return Eigen::VectorXd(h * x); };
  m.noise_embedding = Eigen::MatrixXd::Identity(a.rows(), a.rows());
  m.measurement_dim = h.rows();
  return m;
}

SmootherConfig<double> quiet_config(Eigen::Index state_dim, Eigen::Index meas_dim, double dof) {
  SmootherConfig<double> c;
  c.dof_init = dof;
  c.process_noise = NoiseBlock<double>::zero(state_dim);
  c.measurement_noise = {NoiseBlock<double>::zero(meas_dim)};
  return c;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  auto engine = StreamKey(seed).engine();
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(engine);
  return m;
}

}  // namespace

TEST_CASE("predict with identity dynamics and no noise repeats the newest block") {
  const Eigen::MatrixXd init = random_matrix(3, 5, 1);
  TrajectoryEnsemble<double> ens(init, 0, 5.0);
  ens = predict(std::move(ens), linear_model(Eigen::Matrix3d::Identity(), Eigen::MatrixXd::Identity(3, 3)),
                NoiseBlock<double>::zero(3), StreamKey(2));
  CHECK(ens.block_count() == 2);
  CHECK(ens.horizon_index() == 1);
  CHECK(ens.newest() == init);
  CHECK(ens.block(0) == init);
}

TEST_CASE("predict with linear dynamics applies the map exactly") {
  Eigen::Matrix2d a;
  a << 1.0, 0.1, 0.0, 0.9;
  Eigen::MatrixXd init(2, 3);
  init << 1.0, -2.0, 0.5, 3.0, 0.0, -1.0;
  TrajectoryEnsemble<double> ens(init, 4, 5.0);
  ens = predict(std::move(ens), linear_model(a, Eigen::MatrixXd::Identity(2, 2)), NoiseBlock<double>::zero(2),
                StreamKey(2));
  CHECK(ens.newest() == a * init);
}

TEST_CASE("predict with the bicycle advances one step") {
  const BicycleParams p;
  Model m;
  m.transition = [p](long, const Eigen::VectorXd& x) {
    Eigen::Vector4d s = x.head<4>();
    Eigen::VectorXd out = x;
    out.head<4>() = bicycle_step<double>(s, x.tail<2>(), p);
    return out;
  };
  m.observe = [](long, const Eigen::VectorXd& x) { return Eigen::VectorXd(x); };
  m.noise_embedding = Eigen::MatrixXd::Identity(6, 6);
  m.measurement_dim = 6;
  Eigen::MatrixXd init = Eigen::MatrixXd::Zero(6, 2);
  init(3, 0) = 10.0;
  init(3, 1) = 10.0;
  TrajectoryEnsemble<double> ens(init, 0, 5.0);
  ens = predict(std::move(ens), m, NoiseBlock<double>::zero(6), StreamKey(1));
  CHECK((ens.newest().col(0).head<4>() - Eigen::Vector4d(1.0, 0.0, 0.0, 10.0)).norm() < 1e-14);
}

TEST_CASE("predict names the sample with a non-finite state") {
  Model m = linear_model(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
  m.transition = [](long, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(x[0] > 1.5 ? Eigen::VectorXd::Constant(1, NAN) : x);
  };
  Eigen::MatrixXd init(1, 3);
  init << 0.0, 1.0, 2.0;
  std::string message;
  try {
    (void)predict(TrajectoryEnsemble<double>(init, 0, 5.0), m, NoiseBlock<double>::zero(1), StreamKey(1));
  } catch (const PropagationError& e) {
    message = e.what();
  }
  CHECK(message.find("sample 2") != std::string::npos);
}

TEST_CASE("ensemble statistics") {
  Eigen::MatrixXd same(2, 4);
  same.colwise() = Eigen::Vector2d(1.0, -3.0);
  CHECK(ensemble_stats(TrajectoryEnsemble<double>(same, 0, 5.0)).scale.norm() == 0.0);

  Eigen::MatrixXd pair(1, 2);
  pair << -1.0, 1.0;
  const auto s = ensemble_stats(TrajectoryEnsemble<double>(pair, 0, 4.0));
  CHECK(s.mean[0] == 0.0);
  CHECK(s.scale(0, 0) == doctest::Approx(0.5));

  Eigen::Matrix2d scale;
  scale << 2.0, 0.6, 0.6, 1.0;
  const StudentT<double> dist(Eigen::Vector2d(1.0, -1.0), scale, 5.0);
  auto engine = StreamKey(9).engine();
  const auto big = ensemble_stats(TrajectoryEnsemble<double>(sample_mvt(dist, 100000, engine), 0, 5.0));
  CHECK((big.scale - scale).norm() / scale.norm() < 0.03);
}

TEST_CASE("cross scale restricts to the newest block for linear observations") {
  Eigen::MatrixXd h(2, 3);
  h << 1.0, 0.5, 0.0, 0.0, -1.0, 2.0;
  const Model m = linear_model(Eigen::Matrix3d::Identity() * 0.9, h);
  TrajectoryEnsemble<double> ens(random_matrix(3, 30, 4), 0, 7.0);
  SmootherConfig<double> c = quiet_config(3, 2, 7.0);
  c.process_noise = NoiseBlock<double>::diagonal(Eigen::Vector3d::Constant(0.1), 7.0);
  ens = predict(std::move(ens), m, c.process_noise, StreamKey(5));
  const auto meas = measurement_ensemble(ens, m, c, StreamKey(5));
  const Eigen::MatrixXd full = ensemble_stats(ens).scale;
  CHECK((meas.scale_xy - full.rightCols(3) * h.transpose()).norm() < 1e-12 * full.norm());
  CHECK(meas.noiseless == meas.predicted);
}

TEST_CASE("a measurement independent of the state changes only the dof") {
  Model m = linear_model(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(1, 2));
  const TrajectoryEnsemble<double> ens(random_matrix(2, 10, 3), 0, 5.0);
  const SmootherConfig<double> c = quiet_config(2, 1, 5.0);
  const auto meas = measurement_ensemble(ens, m, c, StreamKey(8));
  const auto result = update(ens, Eigen::VectorXd(Eigen::VectorXd::Constant(1, 4.0)), meas, c, StreamKey(8));
  CHECK(result.gain.norm() == 0.0);
  CHECK(result.ensemble.samples() == ens.samples());
  CHECK(result.ensemble.dof() == 6.0);
}

TEST_CASE("scalar Kalman update in the Gaussian limit") {
  const double m0 = 1.0, p0 = 4.0, r = 1.0, y = 3.0, nu = 1e12;
  SmootherConfig<double> c;
  c.process_noise = NoiseBlock<double>::diagonal(Eigen::VectorXd::Constant(1, p0), nu);
  c.measurement_noise = {NoiseBlock<double>::diagonal(Eigen::VectorXd::Constant(1, r), nu)};
  const Model m = linear_model(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
  const StreamKey key(77);
  auto ens = initialize_ensemble<double>(Eigen::VectorXd::Constant(1, m0), Eigen::MatrixXd::Identity(1, 1),
                                         c.process_noise, 100000, 0, nu, key.child(0));
  const auto meas = measurement_ensemble(ens, m, c, key.child(1));
  const auto post = update(std::move(ens), Eigen::VectorXd(Eigen::VectorXd::Constant(1, y)), meas, c, key.child(1)).ensemble;

  const double mean = m0 + p0 / (p0 + r) * (y - m0);
  const double var = p0 * r / (p0 + r);
  const auto s = ensemble_stats(post);
  CHECK(s.mean[0] == doctest::Approx(mean).epsilon(0.02));
  CHECK(s.scale(0, 0) == doctest::Approx(var).epsilon(0.02));
}

TEST_CASE("an empty horizon returns the initialization") {
  const Eigen::MatrixXd init = random_matrix(2, 6, 12);
  const Model m = linear_model(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
  const auto result = smooth_horizon(TrajectoryEnsemble<double>(init, 3, 5.0), m, {}, quiet_config(2, 2, 5.0),
                                     StreamKey(1));
  CHECK(result.ensemble.samples() == init);
  CHECK(result.mean_trajectory.cols() == 1);
  CHECK((result.mean_trajectory.col(0) - init.rowwise().mean()).norm() < 1e-15);
  CHECK(result.diagnostics.empty());
}

TEST_CASE("statistics, gain and delta do not depend on sample order") {
  Eigen::MatrixXd h(2, 3);
  h << 1.0, 0.0, 0.3, 0.0, 1.0, -0.7;
  Model m = linear_model(Eigen::Matrix3d::Identity(), h);
  m.observe = [h](long, const Eigen::VectorXd& x) {
    Eigen::VectorXd y = h * x;
    y[1] += std::sin(x[0]);
    return y;
  };
  const Eigen::MatrixXd init = random_matrix(3, 40, 6);
  Eigen::MatrixXd shuffled = init;
  for (Eigen::Index j = 0; j < 40; ++j) shuffled.col(j) = init.col((j * 17 + 5) % 40);

  const SmootherConfig<double> c = quiet_config(3, 2, 5.0);
  const Eigen::VectorXd y = Eigen::Vector2d(0.4, -0.2);
  auto run = [&](const Eigen::MatrixXd& x) {
    const TrajectoryEnsemble<double> ens(x, 0, 5.0);
    const auto meas = measurement_ensemble(ens, m, c, StreamKey(3));
    return std::make_pair(meas, update(ens, y, meas, c, StreamKey(3)));
  };
  const auto [ma, ua] = run(init);
  const auto [mb, ub] = run(shuffled);
  CHECK(ma.mean == mb.mean);
  CHECK(ma.scale_yy == mb.scale_yy);
  CHECK(ma.scale_xy == mb.scale_xy);
  CHECK(ua.gain == ub.gain);
  CHECK(ua.diagnostics.delta == ub.diagnostics.delta);
  CHECK(ensemble_stats(ua.ensemble).mean == ensemble_stats(ub.ensemble).mean);
}

TEST_CASE("dof accumulates by the measurement dimension at every update") {
  const Model m = linear_model(Eigen::MatrixXd::Identity(2, 2) * 0.95, Eigen::MatrixXd::Identity(2, 2));
  SmootherConfig<double> c = quiet_config(2, 2, 5.0);
  c.process_noise = NoiseBlock<double>::diagonal(Eigen::Vector2d::Constant(0.2), 5.0);
  c.measurement_noise = {NoiseBlock<double>::diagonal(Eigen::Vector2d::Constant(0.5), 5.0)};
  const std::vector<Eigen::VectorXd> ys(6, Eigen::Vector2d(0.3, -0.1));
  const auto result = smooth_horizon(TrajectoryEnsemble<double>(random_matrix(2, 20, 2), 0, 5.0), m, ys, c,
                                     StreamKey(4));
  REQUIRE(result.diagnostics.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(result.diagnostics[i].dof == 5.0 + 2.0 * static_cast<double>(i + 1));
  CHECK(result.ensemble.dof() == 17.0);
  CHECK(result.mean_trajectory.cols() == 7);
}

TEST_CASE("smoothing is reproducible and thread count independent") {
  const Model m = linear_model(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
  SmootherConfig<double> c = quiet_config(2, 2, 5.0);
  c.process_noise = NoiseBlock<double>::diagonal(Eigen::Vector2d::Constant(0.2), 5.0);
  c.measurement_noise = {NoiseBlock<double>::diagonal(Eigen::Vector2d::Constant(0.5), 5.0)};
  const std::vector<Eigen::VectorXd> ys(4, Eigen::Vector2d(1.0, 0.0));
  const TrajectoryEnsemble<double> init(random_matrix(2, 64, 5), 0, 5.0);
  const auto a = smooth_horizon(init, m, ys, c, StreamKey(6));
  c.threads = 4;
  const auto b = smooth_horizon(init, m, ys, c, StreamKey(6));
  CHECK(a.ensemble.samples() == b.ensemble.samples());
}
