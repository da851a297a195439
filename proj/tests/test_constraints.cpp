#include <doctest.h>

#include <cmath>

#include "bimp/constraints.hpp"
#include "bimp/errors.hpp"

using namespace bimp;

namespace {

RoadGeometry straight_road(double length = 200.0) {
  return RoadGeometry::from_segments(Eigen::Vector2d::Zero(), 0.0, {StraightSegment{length}}, 3.5, 2);
}

ObstacleScript two_point_script() {
  ObstacleScript s;
  s.name = "OV";
  s.footprint = {4.5, 1.8};
  s.waypoints = {{0.0, 0.0, 0.0, 0.0, 10.0}, {1.0, 10.0, 0.0, 0.0, 0.0}};
  return s;
}

}  // namespace

TEST_CASE("collision distance between ellipses") {
  const Footprint car{4.0, 2.0};
  const Footprint point{0.0, 0.0};
  CHECK(collision_distance({0, 0, 0}, car, {0, 0, 0}, car) < 0.0);
  CHECK(collision_distance({0, 0, 0}, point, {6, 8, 0}, point) == doctest::Approx(10.0));
  CHECK(collision_distance({0, 0, 0}, car, {10, 0, 0}, car) == doctest::Approx(6.0));
  CHECK(collision_distance({0, 0, 0}, car, {10, 0, 0}, car, 0.5) == doctest::Approx(5.0));
  // beside each other the minor semi-axes apply
  CHECK(collision_distance({0, 0, 0}, car, {0, 5, 0}, car) == doctest::Approx(3.0));

  const Pose a{1.0, -2.0, 0.4};
  const Pose b{7.0, 3.0, -1.2};
  const Footprint other{4.5, 1.8};
  CHECK(collision_distance(a, car, b, other) == doctest::Approx(collision_distance(b, other, a, car)));
}

TEST_CASE("boundary margin on a straight road") {
  const RoadGeometry road = straight_road();
  CHECK(boundary_margin({50.0, 0.0, 0.0}, road) == doctest::Approx(3.5));
  CHECK(boundary_margin({50.0, 3.5, 0.0}, road) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(boundary_margin({50.0, 2.0, 0.0}, road) == doctest::Approx(1.5));
  CHECK(boundary_margin({50.0, -5.0, 0.0}, road) == doctest::Approx(-1.5));
}

TEST_CASE("road projection on an arc") {
  const RoadGeometry road = RoadGeometry::from_segments(Eigen::Vector2d::Zero(), 0.0,
                                                        {StraightSegment{20.0}, ArcSegment{50.0, 0.5}}, 3.5, 2);
  CHECK(road.length() == doctest::Approx(45.0).epsilon(1e-3));
  CHECK(road.curvature_at(30.0) == doctest::Approx(1.0 / 50.0));
  CHECK(road.curvature_at(10.0) == doctest::Approx(0.0));
  for (double s : {5.0, 27.3, 40.0}) {
    for (double lat : {-2.0, 0.0, 1.5}) {
      const auto p = road.project(road.point_at(s, lat));
      CHECK(p.arc_length == doctest::Approx(s).epsilon(1e-3));
      CHECK(p.lateral == doctest::Approx(lat).epsilon(1e-3));
    }
  }
  // a projection point on the centerline sits at the full half width
  const Eigen::Vector2d c = road.point_at(33.0);
  CHECK(boundary_margin({c.x(), c.y(), 0.0}, road) == doctest::Approx(road.half_width()).epsilon(1e-9));
}

TEST_CASE("constraint vector sign convention") {
  const RoadGeometry road = straight_road();
  ConstraintParams params;
  params.d_min = 6.0;
  params.ego = {0.0, 0.0};
  const std::vector<ObstacleState> ov = {{{25.0, 0.0, 0.0}, 0.0, {0.0, 0.0}}};

  const Eigen::Vector4d x(20.0, 0.0, 0.0, 10.0);
  const Eigen::Vector2d u = Eigen::Vector2d::Zero();
  const Eigen::VectorXd phi = constraint_vector(x, u, u, ov, road, params);
  REQUIRE(phi.size() == constraint_count(1));
  CHECK(phi[0] == doctest::Approx(1.0));
  CHECK((phi.tail(phi.size() - 1).array() < 0.0).all());

  const Eigen::Vector2d at_max = params.u_max;
  const Eigen::VectorXd active = constraint_vector(x, at_max, u, ov, road, params);
  CHECK(active[2] == 0.0);
  CHECK(active[3] == 0.0);
  CHECK(constraint_names(1).size() == static_cast<std::size_t>(constraint_count(1)));
}

TEST_CASE("soft barrier") {
  const BarrierParams p{10.0, 1.0, 1e4};
  Eigen::VectorXd phi(4);
  phi << -2.0, 0.0, 10.0, 1e9;
  const Eigen::VectorXd z = barrier(phi, Eigen::VectorXd::Constant(4, 1.0), p);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == doctest::Approx(10.0));
  CHECK(z[2] == doctest::Approx(110.0));
  CHECK(z[3] == 1e4);

  Eigen::VectorXd grid(41);
  for (Eigen::Index i = 0; i < grid.size(); ++i) grid[i] = -2.0 + 0.1 * static_cast<double>(i);
  const Eigen::VectorXd g = barrier(grid, Eigen::VectorXd::Constant(grid.size(), 0.5), p);
  for (Eigen::Index i = 1; i < g.size(); ++i) CHECK(g[i] >= g[i - 1]);
  CHECK_THROWS_AS((void)barrier(phi, Eigen::VectorXd::Ones(2), p), DomainError);
}

TEST_CASE("obstacle script interpolation") {
  const ObstacleScript s = two_point_script();
  const ObstacleState mid = ov_state_at(s, 0.5);
  CHECK(mid.pose.x == doctest::Approx(5.0));
  CHECK(mid.pose.y == doctest::Approx(0.0));
  CHECK(mid.speed == doctest::Approx(5.0));
  CHECK(ov_state_at(s, 0.0).pose.x == 0.0);
  const ObstacleState late = ov_state_at(s, 7.0);
  CHECK(late.pose.x == 10.0);
  CHECK(late.speed == 0.0);
  CHECK(ov_state_at(s, -1.0).pose.x == 0.0);
}
