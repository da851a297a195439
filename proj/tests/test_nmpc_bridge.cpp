#include <doctest.h>

#include <cmath>

#include "bimp/errors.hpp"
#include "bimp/nmpc_bridge.hpp"

using namespace bimp;

namespace {

Eigen::VectorXd integrator(const Eigen::VectorXd& x, const Eigen::VectorXd& u) { return x + u; }

TrackingNoise unit_noise(double nu) {
  TrackingNoise n;
  n.sigma_x = Eigen::MatrixXd::Identity(1, 1);
  n.sigma_u = Eigen::MatrixXd::Identity(1, 1);
  n.sigma_w = Eigen::MatrixXd::Identity(1, 1);
  n.nu_x = nu;
  n.nu_u = nu;
  n.nu_du = nu;
  return n;
}

References constant_refs(double r, double s, Eigen::Index length) {
  return {Eigen::MatrixXd::Constant(1, length, r), Eigen::MatrixXd::Constant(1, length, s)};
}

}  // namespace

TEST_CASE("rollout builds the increment chain") {
  Eigen::MatrixXd u(1, 3);
  u << 1.0, 3.0, 2.0;
  const CandidateTrajectory c =
      rollout_candidate(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.5), u, integrator);
  REQUIRE(c.length() == 3);
  CHECK(c.x(0, 0) == 0.0);
  CHECK(c.x(0, 1) == 1.0);
  CHECK(c.x(0, 2) == 4.0);
  CHECK(c.du(0, 0) == 0.5);
  CHECK(c.du(0, 1) == 2.0);
  CHECK(c.du(0, 2) == -1.0);
}

TEST_CASE("exact tracking scores zero") {
  const CandidateTrajectory c =
      rollout_candidate(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 4),
                        integrator);
  const References refs = constant_refs(2.0, 0.0, 4);
  CHECK(log_posterior(c, refs, unit_noise(5.0)) == 0.0);
  CHECK(nmpc_cost(c, refs, unit_noise(5.0)) == 0.0);
}

TEST_CASE("cost is the sum of quadratic forms") {
  Eigen::MatrixXd u(1, 3);
  u << 1.0, -1.0, 0.5;
  const CandidateTrajectory c = rollout_candidate(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), u, integrator);
  const References refs = constant_refs(1.0, 0.0, 3);
  TrackingNoise n = unit_noise(5.0);
  n.sigma_x(0, 0) = 4.0;
  const double expected = ((c.x.array() - 1.0).square() / 4.0).sum() + c.u.array().square().sum() +
                          c.du.array().square().sum();
  CHECK(nmpc_cost(c, refs, n) == doctest::Approx(expected));

  // quadrupling the weights quadruples the cost
  TrackingNoise heavier = n;
  heavier.sigma_x /= 4.0;
  heavier.sigma_u /= 4.0;
  heavier.sigma_w /= 4.0;
  CHECK(nmpc_cost(c, refs, heavier) == doctest::Approx(4.0 * expected));
}

TEST_CASE("log posterior terms") {
  Eigen::MatrixXd u(1, 2);
  u << 1.0, 1.0;
  const CandidateTrajectory c = rollout_candidate(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), u, integrator);
  const References refs = constant_refs(0.0, 0.0, 2);
  const double nu = 4.0;
  // residuals: x (0, 1), u (1, 1), du (1, 0)
  const double term = -0.5 * (nu + 1.0) * std::log(1.0 + 1.0 / nu);
  CHECK(log_posterior(c, refs, unit_noise(nu)) == doctest::Approx(4.0 * term));
}

TEST_CASE("large dof log posterior is minus half the cost") {
  Eigen::MatrixXd u(2, 3);
  u << 0.3, -0.2, 0.1, 0.05, 0.0, -0.05;
  auto f = [](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    Eigen::VectorXd next = x;
    next.head(2) += v;
    return next;
  };
  const CandidateTrajectory c = rollout_candidate(Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector2d::Zero(), u, f);
  References refs;
  refs.r = Eigen::MatrixXd::Constant(3, 3, 0.5);
  refs.s = Eigen::MatrixXd::Zero(2, 3);
  TrackingNoise n;
  n.sigma_x = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  n.sigma_u = Eigen::Matrix2d::Identity();
  n.sigma_w = 0.1 * Eigen::Matrix2d::Identity();
  n.nu_x = n.nu_u = n.nu_du = 1e9;
  CHECK(log_posterior(c, refs, n) == doctest::Approx(-0.5 * nmpc_cost(c, refs, n)).epsilon(1e-6));
}

TEST_CASE("equivalence check ranks dominated candidates last") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd u_prev = Eigen::VectorXd::Zero(1);
  const References refs = constant_refs(0.0, 0.0, 3);
  std::vector<CandidateTrajectory> candidates;
  for (double scale : {0.0, 0.5, 1.0, 2.0}) {
    candidates.push_back(rollout_candidate(x0, u_prev, Eigen::MatrixXd::Constant(1, 3, scale), integrator));
  }
  CandidateRequirements req;
  req.dynamics = integrator;
  const EquivalenceReport report = argmax_equivalence_check(candidates, refs, unit_noise(1e10), req);
  CHECK(report.identical());
  CHECK(report.discordant.empty());
  CHECK(report.posterior_order == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(report.costs[0] == 0.0);
}

TEST_CASE("infeasible candidates are rejected") {
  Eigen::MatrixXd u(1, 2);
  u << 1.0, 1.0;
  CandidateTrajectory c = rollout_candidate(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), u, integrator);
  CandidateRequirements req;
  req.dynamics = integrator;
  CHECK_NOTHROW(require_feasible(c, req));

  CandidateTrajectory broken = c;
  broken.x(0, 1) += 0.5;
  CHECK_THROWS_AS(require_feasible(broken, req), DomainError);

  req.constraints = [](const Eigen::VectorXd& x, const Eigen::VectorXd&, const Eigen::VectorXd&, long) {
    return Eigen::VectorXd::Constant(1, x[0] - 0.5);
  };
  CHECK_THROWS_AS(require_feasible(c, req), DomainError);
}
