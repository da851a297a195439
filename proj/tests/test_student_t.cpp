#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bimp/random.hpp"
#include "bimp/student_t.hpp"

using namespace bimp;

namespace {

Eigen::Matrix3d random_spd(RandomEngine& engine) {
  std::normal_distribution<double> normal;
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = normal(engine);
  return a * a.transpose() + Eigen::Matrix3d::Identity();
}

}  // namespace

TEST_CASE("zero factor gives every sample at the location") {
  auto engine = StreamKey(3).engine();
  const Eigen::Vector2d loc(1.5, -2.0);
  const Eigen::MatrixXd samples = sample_mvt<double>(loc, Eigen::MatrixXd::Zero(2, 2), 5.0, 20, engine);
  REQUIRE(samples.cols() == 20);
  for (Eigen::Index j = 0; j < samples.cols(); ++j) CHECK(samples.col(j) == Eigen::VectorXd(loc));
}

TEST_CASE("zero count is an empty result") {
  auto engine = StreamKey(3).engine();
  const StudentT<double> d(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 5.0);
  CHECK(sample_mvt(d, 0, engine).cols() == 0);
}

TEST_CASE("construction rejects bad parameters") {
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.4, 1.0;
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(StudentT<double>(mu, Eigen::MatrixXd::Identity(2, 2), 2.0), DomainError);
  CHECK_THROWS_AS(StudentT<double>(mu, asym, 5.0), DomainError);
  CHECK_THROWS_AS(StudentT<double>(mu, indefinite, 5.0), DomainError);
  CHECK_THROWS_AS(StudentT<double>(mu, Eigen::MatrixXd::Identity(3, 3), 5.0), DomainError);
}

TEST_CASE("scale and covariance conversions") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  CHECK((scale_from_covariance(eye, 4.0) - 0.5 * eye).norm() == doctest::Approx(0.0));

  auto engine = StreamKey(11).engine();
  const Eigen::MatrixXd c = random_spd(engine);
  CHECK((scale_from_covariance(c, 1e12) - c).norm() / c.norm() < 1e-10);
  CHECK((covariance_from_scale(scale_from_covariance(c, 5.0), 5.0) - c).norm() / c.norm() < 1e-14);
  CHECK_THROWS_AS((void)scale_from_covariance(c, 2.0), DomainError);
  CHECK_THROWS_AS((void)covariance_from_scale(c, 1.5), DomainError);
}

TEST_CASE("mahalanobis distance") {
  const Eigen::Vector2d zero = Eigen::Vector2d::Zero();
  const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  CHECK(mahalanobis_sq(zero, eye) == 0.0);
  const Eigen::Vector2d e(0.3, -1.7);
  CHECK(mahalanobis_sq(e, eye) == doctest::Approx(e.squaredNorm()));
  const Eigen::Vector2d r(1.0, 2.0);
  const Eigen::Matrix2d d = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  CHECK(mahalanobis_sq(r, d) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("zero innovation leaves the mean and shrinks the scale by nu/(nu+n)") {
  auto engine = StreamKey(5).engine();
  const Eigen::Matrix3d s = random_spd(engine);
  const Eigen::Vector3d mu(0.5, -1.0, 2.0);
  const double nu = 6.0;
  const JointPartition<double> joint(StudentT<double>(mu, s, nu), 2, 1);
  const auto post = conditional_update(joint, mu.tail<1>());
  CHECK((post.posterior.location() - mu.head<2>()).norm() < 1e-14);
  CHECK(post.delta == 0.0);
  CHECK(post.posterior.dof() == nu + 1.0);
  const Eigen::MatrixXd k = s.topRightCorner(2, 1) / s(2, 2);
  const Eigen::MatrixXd expected =
      nu / (nu + 1.0) * (s.topLeftCorner(2, 2) - k * s(2, 2) * k.transpose());
  // the solve always carries the minimum jitter of 1e-8 * mean(diag)
  CHECK((post.posterior.scale() - expected).norm() / expected.norm() < 1e-7);
}

TEST_CASE("log density") {
  const StudentT<double> t1(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 5.0);
  const double expected = std::lgamma(3.0) - std::lgamma(2.5) - 0.5 * std::log(5.0 * std::numbers::pi);
  CHECK(log_pdf(t1, Eigen::VectorXd::Zero(1)) == doctest::Approx(expected).epsilon(1e-13));

  auto engine = StreamKey(8).engine();
  const Eigen::Vector3d mu(1.0, 2.0, -0.5);
  const StudentT<double> t3(mu, random_spd(engine), 4.0);
  const Eigen::Vector3d a(0.7, -1.3, 2.2);
  CHECK(log_pdf(t3, Eigen::Vector3d(mu + a)) == doctest::Approx(log_pdf(t3, Eigen::Vector3d(mu - a))));
}

TEST_CASE("sample mean converges to the location") {
  auto engine = StreamKey(21).engine();
  const Eigen::Vector2d loc(3.0, -1.0);
  const StudentT<double> d(loc, Eigen::Matrix2d::Identity(), 5.0);
  const Eigen::MatrixXd x = sample_mvt(d, 200000, engine);
  // sd of the mean is sqrt(5/3 / 2e5) ~ 0.003
  CHECK((x.rowwise().mean() - Eigen::VectorXd(loc)).cwiseAbs().maxCoeff() < 0.015);
}

TEST_CASE("sampling is reproducible from the stream key") {
  const StudentT<double> d(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 5.0);
  auto a = StreamKey(42).child({1, 2}).engine();
  auto b = StreamKey(42).child({1, 2}).engine();
  CHECK(sample_mvt(d, 10, a) == sample_mvt(d, 10, b));
}
